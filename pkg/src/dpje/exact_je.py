"""Deterministic fixed-point iteration ``w <- w * h(w)`` for John ellipsoid
weights, used as the reference the randomized solver is tested against."""
import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import TraceError
from .numerics import gram, leverage

log = logging.getLogger(__name__)

WEIGHT_FLOOR = 1e-14


@dataclass
class ExactResult:
    """Output of :func:`exact_iterate`.

    ``u`` is the average of the iterates ``w_1..w_T``; ``w_last`` is ``w_T``.
    ``trace`` holds every iterate (T x n) when requested.
    """

    u: np.ndarray
    w_last: np.ndarray
    T: int
    n_clamped: int
    trace: np.ndarray | None = None


@dataclass(frozen=True)
class OptimalityCertificate:
    active_residual: float
    inactive_excess: float
    max_h: float
    sum_w: float
    tol: float

    @property
    def optimal(self):
        return self.active_residual <= self.tol and self.inactive_excess <= self.tol

    def as_dict(self):
        return {
            "active_residual": self.active_residual,
            "inactive_excess": self.inactive_excess,
            "max_h": self.max_h,
            "sum_w": self.sum_w,
            "tol": self.tol,
            "optimal": self.optimal,
        }


def default_iterations(n, d, xi, delta0=0.05):
    """Iteration count ``ceil(16 log(n/d) / xi + 16 log(1/delta0) / xi^2)``."""
    if not 0 < xi < 1:
        raise ValueError(f"xi must lie in (0, 1), got {xi}")
    if not 0 < delta0 < 1:
        raise ValueError(f"delta0 must lie in (0, 1), got {delta0}")
    return max(1, math.ceil(16 * math.log(n / d) / xi + 16 * math.log(1 / delta0) / xi**2))


def exact_iterate(p, T, keep_trace=False):
    """Run ``T`` iterates of the exact map from ``w_1 = d/n``.

    Weights that fall below ``1e-14`` are lifted back to the floor so the
    Gram matrix stays positive definite; redundant constraints otherwise
    decay to zero.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    n, d = p.A.shape
    w = np.full(n, d / n)
    total = np.zeros(n)
    trace = np.empty((T, n)) if keep_trace else None
    n_clamped = 0
    for k in range(T):
        if keep_trace:
            trace[k] = w
        total += w
        if k == T - 1:
            break
        w = w * leverage(p, w)
        low = w < WEIGHT_FLOOR
        if low.any():
            n_clamped += int(low.sum())
            w[low] = WEIGHT_FLOOR
    return ExactResult(u=total / T, w_last=w, T=T, n_clamped=n_clamped, trace=trace)


def dual_objective(p, w):
    """``sum(w) - log det(A^T W A) - d``."""
    Q = gram(p, w)
    _, logdet = np.linalg.slogdet(Q)
    return float(np.sum(w) - logdet - p.A.shape[1])


def objective_descent(p, trace):
    """Count iterations after the first where the dual objective increased.

    The objective is not guaranteed to decrease; increases are logged rather
    than raised.
    """
    vals = np.array([dual_objective(p, w) for w in trace])
    ups = np.flatnonzero(np.diff(vals[1:]) > 1e-12 * np.maximum(1.0, np.abs(vals[2:])))
    for k in ups:
        log.info("dual objective rose at iterate %d: %.6g -> %.6g", k + 2, vals[k + 1], vals[k + 2])
    return vals, len(ups)


def check_optimality(p, w, tol=1e-6, zero_tol=None):
    """Check the first-order conditions for optimal weights.

    Optimal weights have ``h_i(w) = 1`` wherever ``w_i > 0`` and
    ``h_i(w) <= 1`` elsewhere. Rows with ``w_i <= zero_tol`` count as
    inactive; the default ``zero_tol`` is ``1e-9 * d / n``, which treats the
    positivity floor of the iteration as zero.

    Raises
    ------
    ValueError
        If ``sum(w)`` is more than ``tol * d`` away from ``d``.
    """
    w = np.asarray(w, dtype=np.float64)
    n, d = p.A.shape
    if zero_tol is None:
        zero_tol = 1e-9 * d / n
    sw = float(np.sum(w))
    if abs(sw - d) > max(tol, 1e-12) * d:
        raise ValueError(f"weights sum to {sw:.12g}, expected {d}")
    h = leverage(p, w)
    active = w > zero_tol
    act = float(np.max(np.abs(h[active] - 1))) if active.any() else 0.0
    inact = float(np.max(h[~active] - 1)) if (~active).any() else -math.inf
    return OptimalityCertificate(
        active_residual=act,
        inactive_excess=max(inact, 0.0),
        max_h=float(np.max(h)),
        sum_w=sw,
        tol=tol,
    )


def write_trace(path, trace):
    """Dump a (T x n) weight trace as long-format CSV ``iteration,i,w``."""
    trace = np.asarray(trace)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(["iteration", "i", "w"])
        for k, row in enumerate(trace, 1):
            for i, x in enumerate(row):
                out.writerow([k, i, repr(float(x))])


def read_trace(path):
    """Inverse of :func:`write_trace`; raises TraceError on gaps."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise TraceError(f"{path}: empty trace")
    k = np.array([int(r["iteration"]) for r in rows])
    i = np.array([int(r["i"]) for r in rows])
    T, n = k.max(), i.max() + 1
    if len(rows) != T * n or k.min() != 1:
        raise TraceError(f"{path}: expected {T * n} entries, found {len(rows)}")
    out = np.full((T, n), np.nan)
    out[k - 1, i] = [float(r["w"]) for r in rows]
    if np.isnan(out).any():
        raise TraceError(f"{path}: duplicate or missing entries")
    return out
