"""Hot inner loops with a numba path and a pure-numpy fallback.

The backend is fixed at import time. Set ``DPJE_NUMBA=0`` in the environment to
force the numpy implementations; numba is also skipped when it cannot be
imported. Both implementations of each kernel are importable directly so that
tests and benchmarks can compare them. Row norms always dispatch to numpy,
which wins over the compiled loop; the hit-and-run chain is where numba pays.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

_FLAG = os.environ.get("DPJE_NUMBA", "1").strip().lower()
HAS_NUMBA = numba is not None
USE_NUMBA = HAS_NUMBA and _FLAG not in {"0", "false", "off", "no"}
BACKEND = "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# row_sq_norms: out[i] = || K @ X[i] ||_2^2
# ---------------------------------------------------------------------------

def row_sq_norms_numpy(X, K):
    P = X @ K.T
    return np.einsum("ij,ij->i", P, P)


def _row_sq_norms_loop(X, KT):
    # KT is K transposed so the innermost loop walks contiguous memory
    n, d = X.shape
    m = KT.shape[1]
    out = np.empty(n)
    t = np.empty(m)
    for i in range(n):
        t[:] = 0.0
        for c in range(d):
            xc = X[i, c]
            for r in range(m):
                t[r] += KT[c, r] * xc
        acc = 0.0
        for r in range(m):
            acc += t[r] * t[r]
        out[i] = acc
    return out


# ---------------------------------------------------------------------------
# hit-and-run chain over {x : |A x|_inf <= 1}
# ---------------------------------------------------------------------------

def _chord(y, ad):
    lo = -np.inf
    hi = np.inf
    for i in range(y.shape[0]):
        a = ad[i]
        if a > 0.0:
            t1 = (-1.0 - y[i]) / a
            t2 = (1.0 - y[i]) / a
        elif a < 0.0:
            t1 = (1.0 - y[i]) / a
            t2 = (-1.0 - y[i]) / a
        else:
            continue
        if t1 > lo:
            lo = t1
        if t2 < hi:
            hi = t2
    return lo, hi


def hit_and_run_numpy(A, x0, dirs, us, thin):
    x = x0.copy()
    y = A @ x
    m = dirs.shape[0] // thin
    out = np.empty((m, A.shape[1]))
    AD = dirs @ A.T
    for j in range(dirs.shape[0]):
        ad = AD[j]
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (-1.0 - y) / ad
            t2 = (1.0 - y) / ad
        nz = ad != 0.0
        lo = np.max(np.minimum(t1, t2)[nz])
        hi = np.min(np.maximum(t1, t2)[nz])
        t = lo + us[j] * (hi - lo)
        x += t * dirs[j]
        y += t * ad
        if (j + 1) % thin == 0:
            out[(j + 1) // thin - 1] = x
            y = A @ x
    return out


def _hit_and_run_loop(A, x0, dirs, us, thin):
    n, d = A.shape
    x = x0.copy()
    y = np.empty(n)
    for i in range(n):
        s = 0.0
        for c in range(d):
            s += A[i, c] * x[c]
        y[i] = s
    m = dirs.shape[0] // thin
    out = np.empty((m, d))
    ad = np.empty(n)
    for j in range(dirs.shape[0]):
        for i in range(n):
            s = 0.0
            for c in range(d):
                s += A[i, c] * dirs[j, c]
            ad[i] = s
        lo, hi = _chord(y, ad)
        t = lo + us[j] * (hi - lo)
        for c in range(d):
            x[c] += t * dirs[j, c]
        for i in range(n):
            y[i] += t * ad[i]
        if (j + 1) % thin == 0:
            k = (j + 1) // thin - 1
            for c in range(d):
                out[k, c] = x[c]
            # resync against drift
            for i in range(n):
                s = 0.0
                for c in range(d):
                    s += A[i, c] * x[c]
                y[i] = s
    return out


if HAS_NUMBA:
    _njit = numba.njit(cache=True, nogil=True)
    _row_sq_norms_jit = numba.njit(cache=True, nogil=True, fastmath=True)(_row_sq_norms_loop)

    def row_sq_norms_numba(X, K):
        return _row_sq_norms_jit(X, np.ascontiguousarray(K.T))

    _chord = _njit(_chord)
    hit_and_run_numba = _njit(_hit_and_run_loop)
else:  # pragma: no cover
    row_sq_norms_numba = None
    hit_and_run_numba = None


def row_sq_norms(X, K):
    """Squared norms ``||K x_i||^2`` for every row ``x_i`` of ``X``.

    Always uses the BLAS-backed numpy version: the compiled loop was slower
    at every size measured by ``bench.kernel_comparison``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    K = np.ascontiguousarray(K, dtype=np.float64)
    return row_sq_norms_numpy(X, K)


def hit_and_run(A, x0, dirs, us, thin):
    """Run a hit-and-run chain from ``x0`` with pre-drawn unit directions.

    ``dirs`` has one row per step and ``us`` holds the matching uniforms in
    [0, 1). Every ``thin``-th point of the chain is returned.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64)
    us = np.ascontiguousarray(us, dtype=np.float64)
    if USE_NUMBA:
        return hit_and_run_numba(A, x0, dirs, us, int(thin))
    return hit_and_run_numpy(A, x0, dirs, us, int(thin))
