"""Gaussian noise truncated to ``[-0.5, 0.5]``: normalizers, density, cdf,
an inverse-cdf sampler and the absolute first moment."""
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import DomainError, QuadratureError

LO, HI = -0.5, 0.5
QUAD_EPSABS = 1e-12


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian with location ``beta`` and scale ``sigma`` restricted to the support."""

    sigma: float
    beta: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0 or not math.isfinite(self.sigma):
            raise DomainError(f"sigma must be positive and finite, got {self.sigma}")
        if not abs(self.beta) < 0.5:
            raise DomainError(f"|beta| must be < 0.5, got {self.beta}")


@dataclass(frozen=True)
class TruncConstants:
    c_sigma: float
    c_beta_sigma: float

    @property
    def gamma(self):
        return self.c_sigma / self.c_beta_sigma


def log_band(a, b):
    """``log(Phi(b) - Phi(a))`` for ``a < b``, accurate in either tail."""
    if a > 0:
        a, b = -b, -a
    # now a <= 0, so Phi(a) <= 1/2 and cancellation only hurts when b <= 0 too
    lb = special.log_ndtr(b)
    la = special.log_ndtr(a)
    return float(lb + np.log1p(-np.exp(la - lb)))


def band(a, b):
    return math.exp(log_band(a, b))


def normalizer(m, sigma):
    """Mass of ``N(m, sigma^2)`` on the support."""
    return band((LO - m) / sigma, (HI - m) / sigma)


def constants(beta, sigma):
    """Normalizers ``C_sigma`` (centred) and ``C_{beta,sigma}`` (shifted by beta)."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    return TruncConstants(normalizer(0.0, sigma), normalizer(beta, sigma))


def pdf(spec, z):
    z = np.asarray(z, dtype=np.float64)
    c = normalizer(spec.beta, spec.sigma)
    x = (z - spec.beta) / spec.sigma
    dens = np.exp(-0.5 * x * x) / (math.sqrt(2 * math.pi) * spec.sigma * c)
    return np.where((z >= LO) & (z <= HI), dens, 0.0)


def logpdf(spec, z):
    """Log density; ``-inf`` outside the support."""
    z = np.asarray(z, dtype=np.float64)
    lc = log_band((LO - spec.beta) / spec.sigma, (HI - spec.beta) / spec.sigma)
    x = (z - spec.beta) / spec.sigma
    val = -0.5 * x * x - math.log(math.sqrt(2 * math.pi) * spec.sigma) - lc
    return np.where((z >= LO) & (z <= HI), val, -np.inf)


def cdf(spec, z):
    z = np.clip(np.asarray(z, dtype=np.float64), LO, HI)
    a = (LO - spec.beta) / spec.sigma
    b = (HI - spec.beta) / spec.sigma
    x = (z - spec.beta) / spec.sigma
    if a > 0:
        # upper tail: work with survival functions to avoid 1 - 1
        return (special.ndtr(-a) - special.ndtr(-x)) / (special.ndtr(-a) - special.ndtr(-b))
    return (special.ndtr(x) - special.ndtr(a)) / (special.ndtr(b) - special.ndtr(a))


def sample(spec, rng, size=None):
    """Draw by inverting the cdf on the truncated probability band.

    Each draw consumes one uniform from ``rng``, so the output is a
    deterministic function of the generator state.
    """
    a = (LO - spec.beta) / spec.sigma
    b = (HI - spec.beta) / spec.sigma
    flip = a > 0
    if flip:
        a, b = -b, -a
    u = rng.random(size)
    pa, pb = special.ndtr(a), special.ndtr(b)
    x = special.ndtri(pa + u * (pb - pa))
    x = np.clip(x, a, b)
    if flip:
        x = -x
    z = np.clip(spec.beta + spec.sigma * x, LO, HI)
    return float(z) if np.ndim(z) == 0 else z


def abs_moment(spec):
    """``E|Z|`` for centred noise, by adaptive quadrature.

    The value never exceeds ``sigma``; this is only claimed for
    ``sigma <= 0.1``, so larger scales raise.
    """
    if spec.beta != 0.0:
        raise DomainError("abs_moment is defined for centred noise only")
    if spec.sigma > 0.1:
        raise DomainError(f"abs_moment requires sigma <= 0.1, got {spec.sigma}")
    val, err = integrate.quad(lambda z: z * pdf(spec, z), 0.0, HI, epsabs=QUAD_EPSABS, limit=200)
    if err > 1e-10:
        raise QuadratureError(f"E|Z| quadrature error estimate {err:.2e}")
    m = 2.0 * val
    if m > spec.sigma:
        raise AssertionError(f"E|Z|={m} exceeds sigma={spec.sigma}")
    return m
