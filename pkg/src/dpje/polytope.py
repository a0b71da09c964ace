"""Symmetric polytopes ``{x : |<a_i, x>| <= 1}`` and their one-row neighbours."""
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ClosenessError, DimensionError, ParseError, RankError

RANK_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class Polytope:
    """Constraint matrix ``A`` (n x d) of a centrally symmetric polytope.

    The array is copied and marked read-only on construction.
    """

    A: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=np.float64, copy=True)
        if A.ndim != 2:
            raise DimensionError(f"constraint matrix must be 2-D, got shape {A.shape}")
        n, d = A.shape
        if d < 1:
            raise DimensionError("polytope needs at least one column")
        if n < d:
            raise DimensionError(f"need n >= d, got n={n}, d={d}")
        if not np.all(np.isfinite(A)):
            raise ParseError("constraint matrix has non-finite entries")
        sv = np.linalg.svd(A, compute_uv=False)
        if not sv[-1] > RANK_RTOL * sv[0]:
            raise RankError(
                f"column rank below {d}: sigma_min={sv[-1]:.3e}, sigma_max={sv[0]:.3e}"
            )
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def d(self):
        return self.A.shape[1]

    def contains(self, x, tol=0.0):
        return bool(np.max(np.abs(self.A @ x)) <= 1.0 + tol)


@dataclass(frozen=True)
class NeighborPerturbation:
    """Replace row ``j`` by ``a_j + delta`` with ``||delta||_2 <= eps0``."""

    j: int
    delta: np.ndarray
    eps0: float

    def __post_init__(self):
        if not self.eps0 > 0:
            raise ClosenessError(f"closeness eps0 must be positive, got {self.eps0}")
        object.__setattr__(self, "delta", np.asarray(self.delta, dtype=np.float64))


@dataclass(frozen=True)
class SpectralStats:
    sigma_max: float
    sigma_min: float
    kappa: float
    nnz: int


def _detect_format(path):
    return "csv" if Path(path).suffix.lower() == ".csv" else "whitespace"


def load_polytope(path, format=None):
    """Read a constraint matrix, one row per line.

    ``format`` is ``"csv"`` or ``"whitespace"``; by default it is inferred from
    the file extension. Blank lines and lines starting with ``#`` are skipped.
    """
    fmt = format or _detect_format(path)
    if fmt not in {"csv", "whitespace"}:
        raise ParseError(f"unknown format {fmt!r}")
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc

    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",") if fmt == "csv" else line.split()
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
        if len(rows[-1]) != len(rows[0]):
            raise ParseError(
                f"{path}:{lineno}: expected {len(rows[0])} fields, got {len(rows[-1])}"
            )
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return Polytope(np.array(rows))


def save_polytope(p, path, format=None):
    """Write ``p`` so that :func:`load_polytope` reads back identical values."""
    fmt = format or _detect_format(path)
    sep = "," if fmt == "csv" else " "
    # repr of a Python float round-trips exactly
    lines = [sep.join(repr(float(x)) for x in row) for row in p.A]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def make_neighbor(p, pert):
    """Return the polytope that differs from ``p`` only in row ``pert.j``."""
    if not 0 <= pert.j < p.n:
        raise IndexError(f"row {pert.j} out of range for n={p.n}")
    if pert.delta.shape != (p.d,):
        raise DimensionError(f"delta must have shape ({p.d},), got {pert.delta.shape}")
    norm = float(np.linalg.norm(pert.delta))
    if norm > pert.eps0 * (1 + 1e-12):
        raise ClosenessError(f"||delta||={norm:.3e} exceeds eps0={pert.eps0:.3e}")
    A = np.array(p.A)
    A[pert.j] = A[pert.j] + pert.delta
    return Polytope(A)


def random_perturbation(p, eps0, rng):
    """Draw a row uniformly and a shift uniformly on the ``eps0``-sphere."""
    j = int(rng.integers(p.n))
    delta = rng.standard_normal(p.d)
    delta *= eps0 / np.linalg.norm(delta)
    return NeighborPerturbation(j, delta, eps0)


def spectral_stats(p):
    sv = np.linalg.svd(p.A, compute_uv=False)
    smax, smin = float(sv[0]), float(sv[-1])
    return SpectralStats(smax, smin, smax / smin, int(np.count_nonzero(p.A)))
