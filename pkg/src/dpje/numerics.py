"""Dense kernels shared by the solvers: weighted Gram matrices, leverage
scores, inverse square roots and spectral perturbation bounds."""
from dataclasses import dataclass

import numpy as np

from ._kernels import row_sq_norms
from .errors import DimensionError, PreconditionError, SingularError

DEGENERACY_RTOL = 1e-12
# slack for bounds that hold with equality, e.g. Weyl on a diagonal shift
BOUND_RTOL = 1e-10


def _as_matrix(p):
    return p.A if hasattr(p, "A") else np.asarray(p, dtype=np.float64)


def _check_weights(A, w):
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (A.shape[0],):
        raise DimensionError(f"weights must have shape ({A.shape[0]},), got {w.shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    return w


def _check_pd(Q):
    ev = np.linalg.eigvalsh(Q)
    if not ev[0] > DEGENERACY_RTOL * max(ev[-1], 0.0):
        raise SingularError(
            f"quadratic form is degenerate: eigenvalues in [{ev[0]:.3e}, {ev[-1]:.3e}]"
        )
    return ev


def gram(p, w):
    """Weighted Gram matrix ``Q = sum_i w_i a_i a_i^T = A^T diag(w) A``.

    Raises
    ------
    SingularError
        If the smallest eigenvalue is at most ``1e-12`` times the largest.
    """
    A = _as_matrix(p)
    w = _check_weights(A, w)
    Q = (A * w[:, None]).T @ A
    Q = 0.5 * (Q + Q.T)
    _check_pd(Q)
    return Q


def leverage(p, w):
    """Leverage scores ``h_i(w) = a_i^T (A^T W A)^{-1} a_i``."""
    A = _as_matrix(p)
    Q = gram(A, w)
    L = np.linalg.cholesky(Q)
    # ||L^{-1} a_i||^2 = a_i^T Q^{-1} a_i
    Linv = np.linalg.inv(L)
    return row_sq_norms(A, Linv)


def inv_sqrt(q):
    """Symmetric inverse square root of a positive definite matrix."""
    q = np.asarray(q, dtype=np.float64)
    q = 0.5 * (q + q.T)
    ev, V = np.linalg.eigh(q)
    if not ev[0] > DEGENERACY_RTOL * max(ev[-1], 0.0):
        raise SingularError(
            f"quadratic form is degenerate: eigenvalues in [{ev[0]:.3e}, {ev[-1]:.3e}]"
        )
    M = (V / np.sqrt(ev)) @ V.T
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class PerturbBounds:
    eps0: float
    weyl_lhs: float
    weyl_rhs: float
    wedin_lhs: float
    wedin_rhs: float
    gram_lhs: float
    gram_rhs: float
    inv_gram_lhs: float
    inv_gram_rhs: float

    @staticmethod
    def _le(lhs, rhs):
        return lhs <= rhs * (1 + BOUND_RTOL) + 1e-300

    @property
    def weyl_ok(self):
        return self._le(self.weyl_lhs, self.weyl_rhs)

    @property
    def wedin_ok(self):
        return self._le(self.wedin_lhs, self.wedin_rhs)

    @property
    def gram_ok(self):
        return self._le(self.gram_lhs, self.gram_rhs)

    @property
    def inv_gram_ok(self):
        return self._le(self.inv_gram_lhs, self.inv_gram_rhs)

    @property
    def all_ok(self):
        return self.weyl_ok and self.wedin_ok and self.gram_ok and self.inv_gram_ok


def perturb_bounds(A, B):
    """Evaluate both sides of four spectral perturbation inequalities.

    With ``e = ||A - B||`` (spectral norm), the checks are

    * Weyl: ``max_i |s_i(A) - s_i(B)| <= e``
    * pseudo-inverse: ``||A^+ - B^+|| <= 2 max(||A^+||^2, ||B^+||^2) e``
    * Gram: ``||A^T A - B^T B|| <= 2.1 s_max(A) e``
    * inverse Gram: ``||(A^T A)^{-1} - (B^T B)^{-1}|| <= 8 kappa(A) s_min(A)^{-3} e``

    Raises
    ------
    PreconditionError
        If ``e > 0.1 s_min(A)``; the last two bounds need the shift small.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch {A.shape} vs {B.shape}")
    sa = np.linalg.svd(A, compute_uv=False)
    sb = np.linalg.svd(B, compute_uv=False)
    e = float(np.linalg.norm(A - B, 2))
    if e > 0.1 * sa[-1]:
        raise PreconditionError(
            f"||A-B||={e:.3e} exceeds 0.1*sigma_min(A)={0.1 * sa[-1]:.3e}"
        )
    Ap, Bp = np.linalg.pinv(A), np.linalg.pinv(B)
    GA, GB = A.T @ A, B.T @ B
    kappa = sa[0] / sa[-1]
    return PerturbBounds(
        eps0=e,
        weyl_lhs=float(np.max(np.abs(sa - sb))),
        weyl_rhs=e,
        wedin_lhs=float(np.linalg.norm(Ap - Bp, 2)),
        wedin_rhs=2.0 * max(1 / sa[-1] ** 2, 1 / sb[-1] ** 2) * e,
        gram_lhs=float(np.linalg.norm(GA - GB, 2)),
        gram_rhs=2.1 * sa[0] * e,
        inv_gram_lhs=float(np.linalg.norm(np.linalg.inv(GA) - np.linalg.inv(GB), 2)),
        inv_gram_rhs=8.0 * kappa * sa[-1] ** -3 * e,
    )
