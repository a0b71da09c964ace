"""Gaussian sketches and leverage-score row sampling."""
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import lapack

from ._kernels import row_sq_norms
from .errors import RankError, SingularError
from .numerics import DEGENERACY_RTOL, inv_sqrt

SKETCH_RETRIES = 3


@dataclass(frozen=True)
class SketchSpec:
    s: int
    seed: object = None

    def __post_init__(self):
        if int(self.s) < 1:
            raise ValueError(f"sketch size must be >= 1, got {self.s}")

    @classmethod
    def from_accuracy(cls, xi, seed=None):
        return cls(math.ceil(8 / xi), seed)


@dataclass(frozen=True)
class SampleSpec:
    """Row-sampling budget ``N`` with accuracy ``xi0`` and failure rate ``delta1``."""

    N: int
    delta1: float
    xi0: float
    seed: object = None

    def __post_init__(self):
        if not 0 < self.delta1 < 1:
            raise ValueError(f"delta1 must lie in (0, 1), got {self.delta1}")
        if not 0 < self.xi0 <= 0.1:
            raise ValueError(f"xi0 must lie in (0, 0.1], got {self.xi0}")

    @classmethod
    def from_accuracy(cls, n, d, xi0, delta1, seed=None):
        """``N = ceil(8 d log(n d / delta1) / xi0^2)``."""
        N = math.ceil(8 * d * math.log(n * d / delta1) / xi0**2)
        return cls(N, delta1, xi0, seed)


@dataclass(frozen=True)
class SamplingMatrix:
    """Diagonal ``D`` stored as the sampled rows and their scales.

    ``G = B^T D B`` and its inverse square root ``M`` are cached by
    :func:`sample_rows`.
    """

    n: int
    rows: np.ndarray
    scales: np.ndarray
    probs: np.ndarray
    G: np.ndarray | None = field(default=None, compare=False, repr=False)
    M: np.ndarray | None = field(default=None, compare=False, repr=False)

    def diagonal(self):
        out = np.zeros(self.n)
        out[self.rows] = self.scales
        return out

    def gram(self, B):
        """``B^T D B``; the value cached by :func:`sample_rows` is reused."""
        if self.G is not None:
            return self.G
        Bs = B[self.rows]
        return (Bs * self.scales[:, None]).T @ Bs

    def inv_sqrt_gram(self, B):
        """``(B^T D B)^{-1/2}``, cached when available."""
        if self.M is not None:
            return self.M
        return inv_sqrt(self.gram(B))

    @classmethod
    def identity(cls, n):
        return cls(n, np.arange(n), np.ones(n), np.ones(n))


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def draw_sketch(spec, d, rng=None):
    """``s x d`` matrix of i.i.d. standard normals drawn from ``spec.seed`` unless ``rng`` is given."""
    rng = _rng(spec.seed) if rng is None else rng
    return rng.standard_normal((int(spec.s), d))


def isometry_sketch(d, s=None):
    """Deterministic stand-in with ``S^T S = s I``, so the sketch is exact.

    ``S`` stacks ``s/d`` copies of ``sqrt(d) I_d``.
    """
    s = d if s is None else int(s)
    if s % d:
        raise ValueError(f"isometry sketch needs s divisible by d, got s={s}, d={d}")
    return math.sqrt(d) * np.tile(np.eye(d), (s // d, 1))


def random_signs(rng, shape):
    """Independent +-1 entries, eight per random byte."""
    size = int(np.prod(shape))
    bits = np.unpackbits(np.frombuffer(rng.bytes(-(-size // 8)), dtype=np.uint8))[:size]
    return (2.0 * bits - 1.0).reshape(shape)


def approx_leverage(B, rng, oversample=4):
    """Leverage scores of ``B`` up to a constant factor.

    The Cholesky factor ``L`` of ``(Pi B)^T (Pi B)``, for a random sign
    sketch ``Pi`` with ``4d`` rows, whitens ``B``; the scores are the
    squared row norms of ``B L^{-T}``. Sign entries embed the column space
    as well as Gaussian ones and are several times cheaper to draw.

    With ``n <= 4d`` a sketch saves nothing and the exact scores are
    returned. A singular sketch is redrawn, at most ``SKETCH_RETRIES`` times.
    """
    n, d = B.shape
    k = oversample * d
    if k >= n:
        return row_sq_norms(B, _inv_chol(B.T @ B))
    for _ in range(SKETCH_RETRIES):
        C = random_signs(rng, (k, n)) @ B
        try:
            Linv = _inv_chol(C.T @ C)
        except SingularError:
            continue
        # Pi has unit-variance entries, so (Pi B)^T (Pi B) estimates k B^T B
        return k * row_sq_norms(B, Linv)
    raise SingularError(f"sketched Gram matrix of B singular in {SKETCH_RETRIES} draws")


def _inv_chol(G):
    """Inverse of the lower Cholesky factor of ``G``, with a rank test."""
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise SingularError("Gram matrix is not positive definite") from None
    dg = np.diag(L) ** 2
    if dg.min() <= DEGENERACY_RTOL * dg.max():
        raise SingularError("Gram matrix is numerically singular")
    Linv, info = lapack.dtrtri(L, lower=1)
    if info:
        raise SingularError("Cholesky factor is singular")
    return Linv


def sample_rows(B, spec, probs=None, rng=None):
    """Bernoulli row sampling for ``D`` with ``E[B^T D B] = B^T B``.

    Row ``i`` is kept with probability ``p_i = min(1, N l_i / sum(l))`` and
    scaled by ``1/p_i``. ``probs`` overrides the computed ``p``. If
    ``B^T D B`` comes out singular the draw is repeated once.

    Raises
    ------
    RankError
        If the retry is singular as well.
    """
    B = np.asarray(B, dtype=np.float64)
    n = B.shape[0]
    rng = _rng(spec.seed) if rng is None else rng
    if probs is None:
        lev = approx_leverage(B, rng)
        probs = np.minimum(1.0, spec.N * lev / lev.sum())
    else:
        probs = np.clip(np.asarray(probs, dtype=np.float64), 0.0, 1.0)
    for _ in range(2):
        keep = np.flatnonzero(rng.random(n) < probs)
        D = SamplingMatrix(n, keep, 1.0 / probs[keep], probs)
        G = D.gram(B)
        try:
            # the eigendecomposition doubles as the rank test
            M = inv_sqrt(G)
        except SingularError:
            continue
        return replace(D, G=G, M=M)
    raise RankError("sampled Gram matrix B^T D B is singular after one resample")


def sketched_weights(B, D, S):
    """``(1/s) ||S M b_i||^2`` for every row ``b_i`` of ``B``, ``M = (B^T D B)^{-1/2}``.

    Rows of ``B`` are ``sqrt(w_i) a_i``, so this is the sketched estimate of
    ``w_i a_i^T (B^T D B)^{-1} a_i``.
    """
    M = D.inv_sqrt_gram(B)
    K = (S @ M) / math.sqrt(S.shape[0])
    return row_sq_norms(B, K)


def sketched_weight(B, D, S, i):
    """Single-row version of :func:`sketched_weights`."""
    M = D.inv_sqrt_gram(B)
    y = S @ (M @ B[i])
    return float(y @ y) / S.shape[0]
