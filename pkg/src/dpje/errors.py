"""Exception and warning types raised across the package."""


class DpjeError(Exception):
    """Base class for every error raised by dpje."""


class ParseError(DpjeError):
    pass


class DimensionError(DpjeError):
    pass


class RankError(DpjeError):
    pass


class ClosenessError(DpjeError):
    pass


class SingularError(DpjeError):
    pass


class PreconditionError(DpjeError):
    pass


class DomainError(DpjeError):
    pass


class QuadratureError(DpjeError):
    pass


class BudgetError(DpjeError):
    """Requested privacy budget lies outside the range the calibration covers."""


class InfeasibleError(DpjeError):
    """Calibrated noise failed the accountant round-trip."""


class ConfigError(DpjeError):
    pass


class TraceError(DpjeError):
    pass


class ContainmentViolation(DpjeError):
    def __init__(self, message, rows=(), points=()):
        super().__init__(message)
        self.rows = list(rows)
        self.points = list(points)


class ClampWarning(UserWarning):
    """Iterate weights fell below the positivity floor and were clamped."""
