"""Moments accountant for the truncated-Gaussian mechanism ``f + z``.

Per step, ``alpha(lam)`` is the log moment of the privacy loss between the
centred noise density ``mu0`` and the density ``mu1`` shifted by the
sensitivity ``beta``. Steps compose additively and
``delta = min_lam exp(alpha(lam) - lam * eps)`` converts to (eps, delta).
"""
import csv
import io
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import noise
from .errors import BudgetError, DomainError, InfeasibleError, QuadratureError

log = logging.getLogger(__name__)

# Shipped constants of the closed-form moment bound. See calibrate_constants.
C0_DEFAULT = 0.55
C3_DEFAULT = 0.05
LAMBDA_MAX = 64
ORACLE_RTOL = 1e-12

DEFAULT_RATIOS = tuple(round(0.1 * k, 1) for k in range(1, 11))
DEFAULT_SIGMAS = (0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.45, 0.6, 1.0)


@dataclass
class MomentTable:
    """``alpha(lam)`` for a list of integer orders ``lam``."""

    lambdas: np.ndarray
    alphas: np.ndarray
    beta: float
    sigma: float
    gamma: float
    T: int = 1

    def __post_init__(self):
        self.lambdas = np.asarray(self.lambdas, dtype=np.int64)
        self.alphas = np.asarray(self.alphas, dtype=np.float64)
        if self.lambdas.shape != self.alphas.shape or self.lambdas.size == 0:
            raise ValueError("moment table needs matching, nonempty lambda and alpha arrays")
        if np.any(self.lambdas < 1):
            raise ValueError("orders must be positive integers")

    def to_csv(self):
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["lambda", "alpha"])
        for lam, a in zip(self.lambdas, self.alphas):
            out.writerow([int(lam), repr(float(a))])
        return buf.getvalue()


@dataclass
class PrivacySpec:
    eps: float
    delta: float
    eps0: float
    L: float
    T: int
    sigma: float | None = None
    c1: float = 1.0
    c2: float = 2.0
    C0: float = C0_DEFAULT

    def __post_init__(self):
        if not self.eps > 0:
            raise DomainError(f"eps must be positive, got {self.eps}")
        if not 0 < self.delta < 1:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if not (self.eps0 > 0 and self.L > 0):
            raise DomainError("eps0 and L must be positive")
        if int(self.T) < 1:
            raise DomainError(f"T must be >= 1, got {self.T}")
        self.T = int(self.T)
        if not 2 * self.beta < 1:
            raise DomainError(f"need 2*L*eps0 < 1, got L*eps0={self.beta:.4g}")

    @property
    def beta(self):
        """Sensitivity of one step, ``L * eps0``."""
        return self.L * self.eps0


@dataclass
class CalibrationReport:
    sigma: float
    eps: float
    delta: float
    delta_verified: float
    best_lambda: int
    beta: float
    T: int
    c1: float
    c2: float
    table: MomentTable = field(repr=False)

    def as_dict(self):
        return {
            "schema": "dpje/1",
            "sigma": self.sigma,
            "epsilon": self.eps,
            "delta": self.delta,
            "delta_verified": self.delta_verified,
            "best_lambda": self.best_lambda,
            "beta": self.beta,
            "T": self.T,
            "c1": self.c1,
            "c2": self.c2,
        }


def alpha_bound(beta, sigma, lam, C0=C0_DEFAULT, c3=C3_DEFAULT):
    """Closed-form moment bound ``C0 l(l+1) b^2 g^2 / s^2 + c3 b^3 l^3 g^3 / s^3``."""
    if sigma < beta:
        raise DomainError(f"bound requires sigma >= beta, got sigma={sigma}, beta={beta}")
    g = noise.constants(beta, sigma).gamma
    r = beta / sigma
    return C0 * lam * (lam + 1) * (r * g) ** 2 + c3 * (r * lam * g) ** 3


def admissible_lambdas(beta, sigma, rule="scaled", lam_max=LAMBDA_MAX):
    """Integer orders at which the closed-form bound is claimed.

    ``rule="literal"`` uses ``lam <= 1/(4 gamma)``. Because ``gamma >= 1``
    that set is always empty, so it falls back to ``[1]`` with a warning.
    ``rule="scaled"`` uses ``lam <= sigma^2 / (4 beta^2 gamma)`` and always
    includes ``lam = 1``.
    """
    g = noise.constants(beta, sigma).gamma
    if rule == "literal":
        top = math.floor(1 / (4 * g))
        if top < 1:
            warnings.warn("no positive integer order satisfies lam <= 1/(4 gamma); using lam=1")
            top = 1
    elif rule == "scaled":
        top = math.floor(sigma**2 / (4 * beta**2 * g)) if beta > 0 else lam_max
    else:
        raise ValueError(f"unknown rule {rule!r}")
    return list(range(1, min(max(top, 1), lam_max) + 1))


def _log_moment(logf, vertex):
    """``log int exp(logf)`` over the support for a concave quadratic ``logf``."""
    zs = [noise.LO, noise.HI]
    if noise.LO < vertex < noise.HI:
        zs.append(vertex)
    m = max(logf(z) for z in zs)
    pts = [vertex] if noise.LO < vertex < noise.HI else None
    val, err = integrate.quad(
        lambda z: math.exp(logf(z) - m), noise.LO, noise.HI,
        points=pts, epsabs=0.0, epsrel=ORACLE_RTOL, limit=200,
    )
    if not val > 0 or err > 1e-10 * val:
        raise QuadratureError(f"moment quadrature failed: value {val:.3e}, error {err:.3e}")
    return m + math.log(val)


def moment_oracle(beta, sigma, lam):
    """Exact per-step ``alpha(lam)`` by adaptive quadrature.

    Returns ``log max(E_mu0[(mu1/mu0)^(lam+1)], E_mu0[(mu0/mu1)^lam])``.
    """
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    if not 0 <= beta < 0.5:
        raise DomainError(f"beta must lie in [0, 0.5), got {beta}")
    if beta == 0:
        return 0.0
    s2 = sigma * sigma
    lc0 = noise.log_band(-0.5 / sigma, 0.5 / sigma)
    lc1 = noise.log_band((-0.5 - beta) / sigma, (0.5 - beta) / sigma)
    norm = -math.log(math.sqrt(2 * math.pi) * sigma)

    def log_mu0(z):
        return -0.5 * z * z / s2 + norm - lc0

    def log_ratio(z):
        # log mu1(z) - log mu0(z)
        return (2 * z * beta - beta * beta) / (2 * s2) + lc0 - lc1

    a1 = _log_moment(lambda z: log_mu0(z) + (lam + 1) * log_ratio(z), (lam + 1) * beta)
    a2 = _log_moment(lambda z: log_mu0(z) - lam * log_ratio(z), -lam * beta)
    return max(a1, a2, 0.0)


def moment_table(beta, sigma, lambdas=None):
    """Per-step table from :func:`moment_oracle` over ``1..64`` by default."""
    lambdas = list(range(1, LAMBDA_MAX + 1)) if lambdas is None else list(lambdas)
    alphas = [moment_oracle(beta, sigma, lam) for lam in lambdas]
    return MomentTable(lambdas, alphas, beta, sigma, noise.constants(beta, sigma).gamma)


def compose(table, T):
    """Adaptive composition over ``T`` steps: orders add, ``alpha`` scales by T."""
    if int(T) < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    return MomentTable(table.lambdas, table.alphas * int(T), table.beta, table.sigma,
                       table.gamma, table.T * int(T))


def tail_to_delta(table, eps, return_lambda=False):
    """``delta = min(1, min_lam exp(alpha(lam) - lam * eps))``."""
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    expo = table.alphas - table.lambdas * eps
    k = int(np.argmin(expo))
    delta = min(1.0, math.exp(expo[k]))
    if return_lambda:
        return delta, int(table.lambdas[k])
    return delta


def budget_limit(beta, T, c1=1.0):
    """Largest eps the calibration covers: ``c1 T beta^2 / (1 - 2 beta)``."""
    return c1 * T * beta**2 / (1 - 2 * beta)


def sigma_formula(beta, T, eps, delta, c2=2.0):
    return c2 * beta * math.sqrt(T * math.log(1 / delta)) / ((1 - 2 * beta) * eps)


def calibrate_sigma(spec):
    """Noise scale for (eps, delta)-privacy over ``spec.T`` steps.

    ``sigma = c2 beta sqrt(T log(1/delta)) / ((1 - 2 beta) eps)`` with
    ``beta = L eps0``. The result is checked by composing the quadrature
    moment table over T steps and converting back to delta.

    Raises
    ------
    BudgetError
        If ``eps`` exceeds ``c1 T beta^2 / (1 - 2 beta)``.
    InfeasibleError
        If the round trip gives ``delta' > delta`` at every order.
    """
    beta = spec.beta
    limit = budget_limit(beta, spec.T, spec.c1)
    if spec.eps > limit:
        raise BudgetError(
            f"eps={spec.eps:.4g} exceeds the calibrated range c1*T*beta^2/(1-2beta)={limit:.4g}"
        )
    sigma = sigma_formula(beta, spec.T, spec.eps, spec.delta, spec.c2)
    table = compose(moment_table(beta, sigma), spec.T)
    d_prime, lam = tail_to_delta(table, spec.eps, return_lambda=True)
    if d_prime > spec.delta:
        raise InfeasibleError(
            f"sigma={sigma:.4g} only certifies delta'={d_prime:.3e} > delta={spec.delta:.3e}"
        )
    return CalibrationReport(sigma, spec.eps, spec.delta, d_prime, lam, beta, spec.T,
                             spec.c1, spec.c2, table)


def moment_grid(ratios=DEFAULT_RATIOS, sigmas=DEFAULT_SIGMAS, rule="scaled"):
    """``(beta, sigma, lam)`` points used to validate the closed-form bound."""
    pts = []
    for s in sigmas:
        for r in ratios:
            b = r * s
            if b >= 0.5:
                continue
            for lam in admissible_lambdas(b, s, rule):
                pts.append((b, s, lam))
    return pts


def audit_moments(grid=None, C0=C0_DEFAULT, c3=C3_DEFAULT):
    """Compare :func:`alpha_bound` against :func:`moment_oracle` on a grid."""
    grid = moment_grid() if grid is None else grid
    worst, violations = -math.inf, []
    for b, s, lam in grid:
        exact = moment_oracle(b, s, lam)
        bound = alpha_bound(b, s, lam, C0, c3)
        worst = max(worst, exact - bound)
        if exact > bound:
            violations.append({"beta": b, "sigma": s, "lambda": lam,
                               "oracle": exact, "bound": bound})
    return {"points": len(grid), "C0": C0, "c3": c3,
            "max_oracle_minus_bound": worst, "violations": violations}


def calibrate_constants(grid=None, headroom=1.1, c3_floor=C3_DEFAULT):
    """Re-derive the shipped ``C0`` and ``c3`` from the moment oracle.

    ``C0`` is ``headroom`` times the largest ratio of the oracle to
    ``lam (lam+1) (beta gamma / sigma)^2``. ``c3`` then covers whatever the
    quadratic term misses, again with headroom, and is at least ``c3_floor``.
    """
    grid = moment_grid() if grid is None else grid
    ratios, rows = [], []
    for b, s, lam in grid:
        g = noise.constants(b, s).gamma
        quad = lam * (lam + 1) * (b * g / s) ** 2
        cube = (b * lam * g / s) ** 3
        exact = moment_oracle(b, s, lam)
        ratios.append(exact / quad)
        rows.append((exact, quad, cube))
    c0_raw = max(ratios)
    C0 = headroom * c0_raw
    need = max((e - C0 * q) / c for e, q, c in rows)
    c3 = max(c3_floor, headroom * need)
    return {"C0": C0, "c3": c3, "max_ratio": c0_raw, "points": len(grid)}
