"""Hit-and-run sampling from the uniform distribution on a symmetric polytope."""
import numpy as np

from ._kernels import hit_and_run

CHUNK = 512


def sample_uniform(p, samples, seed=None, thin=None, x0=None):
    """Approximately uniform points of ``{x : |A x|_inf <= 1}``.

    The chain starts at ``x0`` (the origin by default) and moves along
    uniformly random directions to a uniform point of the chord. One point
    is kept every ``thin`` steps, ``10 d`` by default.
    """
    A = p.A
    d = A.shape[1]
    thin = 10 * d if thin is None else int(thin)
    rng = np.random.default_rng(seed)
    x = np.zeros(d) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    out = np.empty((samples, d))
    done = 0
    while done < samples:
        m = min(CHUNK, samples - done)
        dirs = rng.standard_normal((m * thin, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        us = rng.random(m * thin)
        pts = hit_and_run(A, x, dirs, us, thin)
        out[done:done + m] = pts
        x = pts[-1].copy()
        done += m
    return out
