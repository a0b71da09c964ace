"""Wall-clock scaling of the solver and a numba-versus-numpy kernel comparison."""
import time
import warnings

import numpy as np

from . import _kernels
from .errors import ClampWarning
from .polytope import Polytope
from .solver import RunConfig, run


def _gaussian_polytope(n, d, seed):
    return Polytope(np.random.default_rng(seed).standard_normal((n, d)))


def time_run(n, d, T, xi=0.2, repeats=3, seed=0):
    """Best-of-``repeats`` wall time of a non-private run with ``T`` iterations."""
    p = _gaussian_polytope(n, d, seed)
    cfg = RunConfig(xi=xi, iters=T, seed=seed)
    best = np.inf
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClampWarning)
        run(p, cfg.replace(iters=2))  # JIT warm-up
        for _ in range(repeats):
            t0 = time.perf_counter()
            run(p, cfg)
            best = min(best, time.perf_counter() - t0)
    return best


def scaling_in_n(n_list, d=20, T=50, xi=0.2, repeats=3, seed=0):
    """Rows ``(n, d, T, nnz, seconds)`` for each ``n``."""
    rows = []
    for n in n_list:
        t = time_run(int(n), d, T, xi, repeats, seed)
        rows.append({"n": int(n), "d": d, "T": T, "nnz": int(n) * d, "seconds": t})
    return rows


def scaling_in_T(T_list, n=1000, d=20, xi=0.2, repeats=3, seed=0):
    return [{"n": n, "d": d, "T": int(T), "nnz": n * d,
             "seconds": time_run(n, d, int(T), xi, repeats, seed)} for T in T_list]


def growth_ratios(rows):
    """Wall-time growth divided by nnz growth between consecutive rows.

    Near-linear scaling gives values close to 1; the acceptance limit is 1.5,
    i.e. a time ratio of at most 3 when ``n`` doubles.
    """
    out = []
    for a, b in zip(rows, rows[1:]):
        out.append((b["seconds"] / a["seconds"]) / (b["nnz"] / a["nnz"]))
    return out


def per_iteration_spread(rows):
    """Largest relative deviation of ``seconds / T`` from its mean."""
    per = np.array([r["seconds"] / r["T"] for r in rows])
    return float(np.max(np.abs(per / per.mean() - 1)))


def kernel_comparison(n=4000, d=20, m=80, steps=20000, repeats=5, seed=0):
    """Time the numba and numpy versions of each hot kernel on the same inputs.

    Returns one dict per kernel with both timings and the largest absolute
    difference between the two outputs.
    """
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    K = rng.standard_normal((m, d))
    A = rng.standard_normal((max(2 * d, 50), d))
    dirs = rng.standard_normal((steps, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    us = rng.random(steps)
    x0 = np.zeros(d)
    # rounding differences grow geometrically along a hit-and-run chain, so
    # the two chains are compared over their first 100 steps only
    short = (A, x0, dirs[:100], us[:100])
    cases = [
        ("row_sq_norms", _kernels.row_sq_norms_numpy, _kernels.row_sq_norms_numba,
         (X, K), (X, K)),
        ("hit_and_run",
         lambda *a: _kernels.hit_and_run_numpy(*a, 10),
         (lambda *a: _kernels.hit_and_run_numba(*a, 10)) if _kernels.HAS_NUMBA else None,
         (A, x0, dirs, us), short),
    ]
    out = []
    for name, f_np, f_nb, args, check in cases:
        rec = {"kernel": name, "numpy_s": _best(f_np, args, repeats)}
        if f_nb is not None:
            f_nb(*args)
            rec["numba_s"] = _best(f_nb, args, repeats)
            rec["speedup"] = rec["numpy_s"] / rec["numba_s"]
            rec["max_abs_diff"] = float(np.max(np.abs(f_np(*check) - f_nb(*check))))
        out.append(rec)
    return out


def _best(f, args, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        f(*args)
        best = min(best, time.perf_counter() - t0)
    return best
