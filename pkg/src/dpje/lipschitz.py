"""Lipschitz constant of the weighted leverage map under a one-row shift, and a
randomized auditor that checks it."""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .numerics import leverage
from .polytope import make_neighbor, random_perturbation, spectral_stats


@dataclass(frozen=True)
class LipschitzBound:
    L: float
    eps1: float
    eps0: float


@dataclass
class AuditReport:
    L: float
    eps0: float
    trials: int
    max_ratio: float
    max_ratio_over_L: float
    violations: list = field(default_factory=list)

    def as_dict(self):
        return {
            "schema": "dpje/1",
            "L": self.L,
            "eps0": self.eps0,
            "trials": self.trials,
            "max_ratio": self.max_ratio,
            "max_ratio_over_L": self.max_ratio_over_L,
            "violations": self.violations,
        }


def lipschitz_constant(n, sigma_max, sigma_min, eps0, j_scale=None):
    """Closed-form ``L`` from the singular values of ``A``.

    With ``e1 = 8 kappa sigma_min^-3 eps0``::

        L eps0 = sqrt((n-1) (e1 smax^2)^2
                      + (e1 (smax + eps0)^2 + eps0 c (2 smax + eps0))^2)

    where ``c = smax^2`` unless ``j_scale`` overrides it.
    """
    kappa = sigma_max / sigma_min
    eps1 = 8.0 * kappa * sigma_min**-3 * eps0
    c = sigma_max**2 if j_scale is None else j_scale
    other = (n - 1) * (eps1 * sigma_max**2) ** 2
    row_j = eps1 * (sigma_max + eps0) ** 2 + eps0 * c * (2 * sigma_max + eps0)
    return LipschitzBound(math.sqrt(other + row_j**2) / eps0, eps1, eps0)


def _check_eps0(sigma_min, eps0):
    if not eps0 > 0:
        raise PreconditionError(f"eps0 must be positive, got {eps0}")
    if eps0 > 0.1 * sigma_min:
        raise PreconditionError(
            f"eps0={eps0:.3e} exceeds 0.1*sigma_min(A)={0.1 * sigma_min:.3e}"
        )


def lipschitz_bound(p, eps0):
    """``L`` and ``eps1`` for polytope ``p`` at closeness ``eps0``.

    Raises
    ------
    PreconditionError
        If ``eps0 > 0.1 sigma_min(A)``.
    """
    st = spectral_stats(p)
    _check_eps0(st.sigma_min, eps0)
    return lipschitz_constant(p.n, st.sigma_max, st.sigma_min, eps0)


def lipschitz_bound_strict(p, w, eps0):
    """Weight-aware variant.

    The inverse-Gram perturbation uses the singular values of
    ``B = W^{1/2} A`` and the row-j cross term uses the operator norm of
    ``(A^T W A)^{-1}``, i.e. ``sigma_min(B)^-2``, in place of ``smax(A)^2``.
    """
    sa = np.linalg.svd(p.A, compute_uv=False)
    sb = np.linalg.svd(np.sqrt(np.asarray(w))[:, None] * p.A, compute_uv=False)
    _check_eps0(sa[-1], eps0)
    eps1 = 8.0 * (sb[0] / sb[-1]) * sb[-1] ** -3 * eps0
    smax = sa[0]
    other = (p.n - 1) * (eps1 * smax**2) ** 2
    row_j = eps1 * (smax + eps0) ** 2 + eps0 * sb[-1] ** -2 * (2 * smax + eps0)
    return LipschitzBound(math.sqrt(other + row_j**2) / eps0, eps1, eps0)


def weighted_leverage_map(p, w):
    """``f_i = w_i a_i^T (A^T W A)^{-1} a_i``; the entries sum to ``d``."""
    w = np.asarray(w, dtype=np.float64)
    return w * leverage(p, w)


def perturbation_ratio(p, pert, w):
    """``||f(w, A) - f(w, A')|| / eps0`` for the neighbour described by ``pert``."""
    q = make_neighbor(p, pert)
    diff = weighted_leverage_map(p, w) - weighted_leverage_map(q, w)
    return float(np.linalg.norm(diff)) / pert.eps0


def audit_lipschitz(p, eps0, trials=1000, seed=None, w_range=(0.1, 1.0)):
    """Brute-force check of the Lipschitz bound on random neighbours.

    Each trial draws a row, a shift on the ``eps0``-sphere and weights
    uniform on ``w_range`` from its own child seed. A trial violates the
    bound when its ratio exceeds both the closed-form and the strict ``L``.
    """
    base = lipschitz_bound(p, eps0)
    root = np.random.SeedSequence(seed)
    worst, worst_rel, bad = 0.0, 0.0, []
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(root.entropy, spawn_key=(t,)))
        pert = random_perturbation(p, eps0, rng)
        w = rng.uniform(*w_range, size=p.n)
        r = perturbation_ratio(p, pert, w)
        L = max(base.L, lipschitz_bound_strict(p, w, eps0).L)
        worst = max(worst, r)
        worst_rel = max(worst_rel, r / base.L)
        if r > L:
            bad.append({"trial": t, "row": pert.j, "ratio": r, "L": L})
    return AuditReport(base.L, eps0, trials, worst, worst_rel, bad)
