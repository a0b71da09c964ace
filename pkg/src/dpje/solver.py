"""Randomized fixed-point solver for John ellipsoid weights, with optional
truncated-Gaussian noise for differential privacy.

Each iteration rescales the rows by the current weights, samples rows by
approximate leverage, estimates ``w_i a_i^T (B^T D B)^{-1} a_i`` with a
Gaussian sketch and, in private mode, multiplies by ``1 + z`` with ``z``
truncated to ``[-0.5, 0.5]``. The output averages all iterates and rescales
them to sum to ``d``.
"""
import dataclasses
import logging
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import noise
from ._kernels import BACKEND, row_sq_norms
from .accountant import PrivacySpec, calibrate_sigma
from .errors import BudgetError, ConfigError, ContainmentViolation, ClampWarning, TraceError
from .exact_je import WEIGHT_FLOOR, default_iterations
from .hitrun import sample_uniform
from .lipschitz import lipschitz_bound
from .numerics import gram, leverage
from .sketch_sample import (SampleSpec, SamplingMatrix, approx_leverage, draw_sketch,
                            isometry_sketch, sample_rows, SketchSpec)

log = logging.getLogger(__name__)

SCHEMA = "dpje/1"
TELESCOPE_SLACK = 1e-9


@dataclass
class RunConfig:
    """Solver settings. ``None`` fields are derived from the polytope."""

    xi: float = 0.1
    delta0: float = 0.05
    delta1: float = 0.01
    private: bool = False
    eps: float | None = None
    delta: float | None = None
    eps0: float | None = None
    L: float | None = None
    seed: int | None = None
    s: int | None = None
    iters: int | None = None
    xi0: float | None = None
    n_samples: int | None = None
    sigma: float | None = None
    sampling: str = "leverage"
    sketch: str = "gaussian"
    keep_trace: bool = False
    c1: float = 1.0
    c2: float = 2.0
    max_iters: int = 1_000_000

    def __post_init__(self):
        if not 0 < self.xi < 1:
            raise ConfigError(f"xi must lie in (0, 1), got {self.xi}")
        if self.sampling not in {"leverage", "full"}:
            raise ConfigError(f"unknown sampling mode {self.sampling!r}")
        if self.sketch not in {"gaussian", "isometry"}:
            raise ConfigError(f"unknown sketch mode {self.sketch!r}")
        if self.private and (self.eps is None or self.delta is None or self.eps0 is None):
            raise ConfigError("private mode needs eps, delta and eps0")

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)


@dataclass(frozen=True)
class Params:
    s: int
    T: int
    xi0: float
    N: int
    sigma: float | None
    L: float | None
    beta: float | None
    delta_verified: float | None = None


@dataclass(frozen=True)
class Certificate:
    max_h: float
    sum_v: float
    d: int
    xi: float

    @property
    def target(self):
        return (1 + self.xi) ** 2

    @property
    def ok(self):
        return self.max_h <= self.target and abs(self.sum_v - self.d) <= 1e-10 * self.d

    def as_dict(self):
        return {"max_h": self.max_h, "sum_v": self.sum_v, "target": self.target,
                "target_1_plus_xi": 1 + self.xi, "ok": self.ok}


@dataclass
class Trace:
    """Per-iteration vectors, each ``T x n``, plus ``w_hat`` one step past T.

    Row ``k`` holds iterate ``k+1``: the exact update ``w_hat``, the update
    with the sampled Gram matrix ``w_tilde``, the sketched estimate
    ``w_bar``, the noisy estimate ``w_noisy`` and the weights ``w`` after
    the positivity floor.
    """

    w_hat: np.ndarray
    w_tilde: np.ndarray
    w_bar: np.ndarray
    w_noisy: np.ndarray
    w: np.ndarray
    w_hat_next: np.ndarray


@dataclass
class Telescope:
    """Per-row error split of ``log h_i(u)`` for the averaged weights ``u``.

    ``floor`` is the effect of lifting tiny weights to the positivity floor;
    it is never positive.
    """

    phi: np.ndarray
    ideal: np.ndarray
    ideal_bound: float
    sampling: np.ndarray
    sketch: np.ndarray
    noise: np.ndarray
    floor: np.ndarray

    @property
    def total(self):
        return self.ideal_bound + self.sampling + self.sketch + self.noise + self.floor

    @property
    def ok(self):
        return bool(np.all(self.phi <= self.total + TELESCOPE_SLACK))

    def summary(self):
        return {
            "ideal_bound": self.ideal_bound,
            "ideal_max": float(np.max(self.ideal)),
            "sampling_max": float(np.max(self.sampling)),
            "sketch_max": float(np.max(self.sketch)),
            "noise_max": float(np.max(self.noise)),
            "floor_min": float(np.min(self.floor)),
            "phi_max": float(np.max(self.phi)),
            "ok": self.ok,
        }


@dataclass
class EllipsoidResult:
    v: np.ndarray
    Q: np.ndarray
    u: np.ndarray
    certificate: Certificate
    params: Params
    config: RunConfig
    stats: dict = field(default_factory=dict)
    trace: Trace | None = None
    telescope: Telescope | None = None

    def to_json(self):
        cfg = self.config
        out = {
            "schema": SCHEMA,
            "v": self.v.tolist(),
            "Q": self.Q.tolist(),
            "max_h": self.certificate.max_h,
            "sum_v": self.certificate.sum_v,
            "certificate": self.certificate.as_dict(),
            "T": self.params.T,
            "s": self.params.s,
            "N": self.params.N,
            "xi": cfg.xi,
            "private": cfg.private,
            "sigma": self.params.sigma,
            "epsilon": cfg.eps if cfg.private else None,
            "delta": cfg.delta if cfg.private else None,
            "stats": self.stats,
        }
        if self.telescope is not None:
            out["telescope"] = self.telescope.summary()
        return out


def private_iterations(n, xi, delta0, beta):
    """``ceil(16 (log(n/delta0) + beta^-2) / xi^2)`` with ``beta = L eps0``."""
    return math.ceil(16 * (math.log(n / delta0) + beta**-2) / xi**2)


def derive_params(p, cfg):
    """Fill in sketch size, iteration count, sampling budget and noise scale."""
    n, d = p.A.shape
    s = cfg.s if cfg.s is not None else math.ceil(8 / cfg.xi)
    xi0 = cfg.xi0 if cfg.xi0 is not None else cfg.xi / 8
    N = (cfg.n_samples if cfg.n_samples is not None
         else SampleSpec.from_accuracy(n, d, xi0, cfg.delta1).N)
    if not cfg.private:
        T = cfg.iters if cfg.iters is not None else default_iterations(n, d, cfg.xi, cfg.delta0)
        _check_iters(T, cfg)
        return Params(s, T, xi0, N, None, None, None)

    L = cfg.L if cfg.L is not None else lipschitz_bound(p, cfg.eps0).L
    beta = L * cfg.eps0
    if not 2 * beta < 1:
        raise BudgetError(f"private mode needs 2*L*eps0 < 1, got L*eps0={beta:.4g}")
    T = cfg.iters if cfg.iters is not None else private_iterations(n, cfg.xi, cfg.delta0, beta)
    _check_iters(T, cfg)
    if cfg.sigma is not None:
        return Params(s, T, xi0, N, float(cfg.sigma), L, beta)
    rep = calibrate_sigma(PrivacySpec(cfg.eps, cfg.delta, cfg.eps0, L, T, c1=cfg.c1, c2=cfg.c2))
    return Params(s, T, xi0, N, rep.sigma, L, beta, rep.delta_verified)


def _check_iters(T, cfg):
    if T < 1:
        raise ConfigError(f"iteration count must be >= 1, got {T}")
    if T > cfg.max_iters:
        raise ConfigError(
            f"derived iteration count {T} exceeds max_iters={cfg.max_iters}; "
            "pass an explicit iteration count (--iters) or a larger eps0"
        )


def _stream(entropy, k):
    """Generator for iteration ``k``; it feeds the leverage sketch, the row
    sampling, the Gaussian sketch and the noise, in that order."""
    return np.random.default_rng(np.random.SeedSequence(entropy, spawn_key=(k,)))


def run(p, cfg=None):
    """Compute approximate John ellipsoid weights for polytope ``p``.

    Returns
    -------
    EllipsoidResult
        ``v`` sums to ``d`` and ``Q = A^T diag(v) A``. The certificate holds
        ``max_i h_i(v)``; the run is accepted when it is at most
        ``(1 + xi)^2``.
    """
    cfg = RunConfig() if cfg is None else cfg
    t0 = time.perf_counter()
    A = p.A
    n, d = A.shape
    prm = derive_params(p, cfg)
    entropy = np.random.SeedSequence(cfg.seed).entropy
    spec_noise = noise.NoiseSpec(prm.sigma) if cfg.private else None
    sample_spec = SampleSpec(prm.N, cfg.delta1, min(prm.xi0, 0.1))
    T = prm.T

    w = np.full(n, d / n)
    total = w.copy()
    keep = cfg.keep_trace
    if keep:
        tr = {name: np.empty((T, n))
              for name in ("w_hat", "w_tilde", "w_bar", "w_noisy", "w")}
        for arr in tr.values():
            arr[0] = w
    n_clamped = 0
    S_iso = isometry_sketch(d) if cfg.sketch == "isometry" else None

    for k in range(1, T):
        rng = _stream(entropy, k)
        B = np.sqrt(w)[:, None] * A
        if cfg.sampling == "full":
            D = SamplingMatrix.identity(n)
        else:
            lev = approx_leverage(B, rng)
            probs = np.minimum(1.0, prm.N * lev / lev.sum())
            D = sample_rows(B, sample_spec, probs=probs, rng=rng)
        if S_iso is not None:
            S = S_iso
        else:
            S = draw_sketch(SketchSpec(prm.s), d, rng=rng)

        M = D.inv_sqrt_gram(B)
        w_bar = row_sq_norms(B, (S @ M) / math.sqrt(S.shape[0]))
        if cfg.private:
            z = noise.sample(spec_noise, rng, n)
            w_new = w_bar * (1.0 + z)
        else:
            w_new = w_bar.copy()
        if keep:
            tr["w_hat"][k] = w * leverage(A, w)
            tr["w_tilde"][k] = row_sq_norms(B, M)
            tr["w_bar"][k] = w_bar
            tr["w_noisy"][k] = w_new
        low = w_new < WEIGHT_FLOOR
        if low.any():
            n_clamped += int(low.sum())
            w_new[low] = WEIGHT_FLOOR
        if keep:
            tr["w"][k] = w_new
        w = w_new
        total += w

    if n_clamped:
        warnings.warn(f"{n_clamped} weights clamped to {WEIGHT_FLOOR:g}", ClampWarning,
                      stacklevel=2)
    u = total / T
    v = d * u / np.sum(u)
    Q = gram(A, v)
    h = leverage(A, v)
    cert = Certificate(float(np.max(h)), float(np.sum(v)), d, cfg.xi)
    stats = {
        "runtime_s": time.perf_counter() - t0,
        "n": n,
        "d": d,
        "nnz": int(np.count_nonzero(A)),
        "n_clamped": n_clamped,
        "backend": BACKEND,
        "seed_entropy": str(entropy),
        "L": prm.L,
        "delta_verified": prm.delta_verified,
    }
    res = EllipsoidResult(v, Q, u, cert, prm, cfg, stats)
    if keep:
        res.trace = Trace(tr["w_hat"], tr["w_tilde"], tr["w_bar"], tr["w_noisy"], tr["w"],
                          w * leverage(A, w))
        res.telescope = telescope(res.trace, A, u)
    log.info("run finished: T=%d max_h=%.6f sum_v=%.12g in %.2fs", T, cert.max_h,
             cert.sum_v, stats["runtime_s"])
    return res


def telescope(trace, A, u):
    """Split ``log h_i(u)`` into ideal, sampling, sketch, noise and floor terms.

    With iterates ``w_1..w_T`` and ``u`` their mean, convexity of
    ``log h_i`` and ``w_k h(w_k) = w_hat_{k+1}`` give::

        log h_i(u) <= (1/T) log(w_hat_{T+1} / w_1)
                      + (1/T) sum_k [log(w_hat/w_tilde) + log(w_tilde/w_bar)
                                     + log(w_bar/w_noisy) + log(w_noisy/w)]_k

    and the first term is at most ``(1/T) log(n/d)`` since
    ``w_hat <= 1``.

    Raises
    ------
    TraceError
        If any trace array is missing, misshapen or non-positive.
    """
    if trace is None:
        raise TraceError("run was not traced; set keep_trace=True")
    n, d = A.shape
    arrs = (trace.w_hat, trace.w_tilde, trace.w_bar, trace.w_noisy, trace.w)
    T = trace.w.shape[0]
    if any(a is None or a.shape != (T, n) for a in arrs) or trace.w_hat_next is None:
        raise TraceError("incomplete trace")
    if any(np.any(~(a > 0)) for a in arrs + (trace.w_hat_next,)):
        raise TraceError("trace contains non-positive or missing weights")
    phi = np.log(leverage(A, u))
    return Telescope(
        phi=phi,
        ideal=np.log(trace.w_hat_next / trace.w[0]) / T,
        ideal_bound=math.log(n / d) / T,
        sampling=np.log(trace.w_hat / trace.w_tilde).sum(axis=0) / T,
        sketch=np.log(trace.w_tilde / trace.w_bar).sum(axis=0) / T,
        noise=np.log(trace.w_bar / trace.w_noisy).sum(axis=0) / T,
        floor=np.log(trace.w_noisy / trace.w).sum(axis=0) / T,
    )


@dataclass
class ContainmentReport:
    max_h: float
    inner_target: float
    inner_rows: list
    samples: int
    max_quad: float
    outer_points: list

    @property
    def ok(self):
        return not self.inner_rows and not self.outer_points

    def as_dict(self):
        return {"max_h": self.max_h, "inner_target": self.inner_target,
                "inner_violations": self.inner_rows, "samples": self.samples,
                "max_xQx": self.max_quad, "outer_violations": self.outer_points,
                "ok": self.ok}


def containment_check(p, res, samples=10_000, seed=None, xi=None, strict=False, tol=1e-9):
    """Check that ``E = {x : x^T Q x <= 1}`` rounds the polytope.

    Inner: every row satisfies ``h_i(v) <= 1 + xi``, where ``xi`` defaults
    to the slack recorded in the result's certificate. Outer: hit-and-run
    points ``x`` of the polytope satisfy ``x^T Q x <= d``.

    Raises
    ------
    ContainmentViolation
        Only with ``strict=True`` and at least one violation.
    """
    d = p.d
    target = 1 + (res.certificate.max_h - 1 if xi is None else xi)
    h = leverage(p, res.v)
    inner = [int(i) for i in np.flatnonzero(h > target * (1 + tol))]
    outer, max_quad = [], 0.0
    if samples:
        X = sample_uniform(p, samples, seed=seed)
        quad = np.einsum("ij,jk,ik->i", X, res.Q, X)
        max_quad = float(np.max(quad))
        outer = [int(i) for i in np.flatnonzero(quad > d * (1 + tol))]
    rep = ContainmentReport(float(np.max(h)), target, inner, samples, max_quad, outer)
    if strict and not rep.ok:
        raise ContainmentViolation(
            f"{len(inner)} inner and {len(outer)} outer violations", rows=inner, points=outer
        )
    return rep
