import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dpje.errors import ClosenessError, DimensionError, ParseError, RankError
from dpje.polytope import (
    NeighborPerturbation, Polytope, load_polytope, make_neighbor,
    random_perturbation, save_polytope, spectral_stats,
)


def test_load_whitespace_skips_comments(tmp_matrix):
    p = load_polytope(tmp_matrix)
    np.testing.assert_array_equal(p.A, [[1, 0], [0, 1], [1, 1]])
    assert (p.n, p.d) == (3, 2)


def test_load_csv(tmp_path):
    path = tmp_path / "a.csv"
    path.write_text("1,2\n3,4.5\n\n-1,0\n", encoding="utf-8")
    assert load_polytope(path).A[1, 1] == 4.5


@pytest.mark.parametrize("text, err", [
    ("1 2\n3\n", ParseError),
    ("1 x\n2 3\n", ParseError),
    ("# only a comment\n", ParseError),
    ("1 nan\n0 1\n", ParseError),
    ("1 2\n2 4\n", RankError),
    ("1 0 0\n", DimensionError),
])
def test_load_rejects_bad_input(tmp_path, text, err):
    path = tmp_path / "bad.txt"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(err):
        load_polytope(path)


def test_missing_file_is_parse_error(tmp_path):
    with pytest.raises(ParseError):
        load_polytope(tmp_path / "nope.txt")


def test_array_is_copied_and_frozen():
    A = np.eye(2)
    p = Polytope(A)
    A[0, 0] = 5
    assert p.A[0, 0] == 1
    with pytest.raises(ValueError):
        p.A[0, 0] = 2


@pytest.mark.parametrize("fmt", ["csv", "whitespace"])
def test_save_load_round_trip_is_exact(tmp_path, fmt):
    p = Polytope(np.random.default_rng(1).standard_normal((12, 3)) / 7)
    path = tmp_path / f"p.{fmt}"
    save_polytope(p, path, fmt)
    np.testing.assert_array_equal(load_polytope(path, fmt).A, p.A)


def test_contains():
    p = Polytope(np.eye(2))
    assert p.contains(np.array([1.0, -1.0]))
    assert not p.contains(np.array([1.01, 0.0]))


def test_make_neighbor_changes_one_row():
    p = Polytope(np.eye(3))
    q = make_neighbor(p, NeighborPerturbation(1, [0, 1e-3, 0], 1e-3))
    assert np.count_nonzero(q.A - p.A) == 1
    assert q.A[1, 1] == pytest.approx(1.001)


def test_make_neighbor_errors():
    p = Polytope(np.eye(2))
    with pytest.raises(IndexError):
        make_neighbor(p, NeighborPerturbation(2, [0, 0], 1))
    with pytest.raises(DimensionError):
        make_neighbor(p, NeighborPerturbation(0, [0, 0, 0], 1))
    with pytest.raises(ClosenessError):
        make_neighbor(p, NeighborPerturbation(0, [0.2, 0], 0.1))
    with pytest.raises(ClosenessError):
        NeighborPerturbation(0, [0, 0], 0.0)


@given(st.integers(0, 2**32 - 1), st.floats(1e-8, 1e-2))
def test_random_perturbation_lies_on_sphere(seed, eps0):
    p = Polytope(np.eye(3))
    pert = random_perturbation(p, eps0, np.random.default_rng(seed))
    assert 0 <= pert.j < 3
    assert np.linalg.norm(pert.delta) == pytest.approx(eps0, rel=1e-12)
    make_neighbor(p, pert)


def test_spectral_stats_against_gram_eigenvalues():
    A = np.random.default_rng(3).standard_normal((40, 5))
    ev = np.linalg.eigvalsh(A.T @ A)
    st_ = spectral_stats(Polytope(A))
    assert st_.sigma_max == pytest.approx(np.sqrt(ev[-1]), rel=1e-12)
    assert st_.sigma_min == pytest.approx(np.sqrt(ev[0]), rel=1e-10)
    assert st_.kappa == pytest.approx(st_.sigma_max / st_.sigma_min)
    assert st_.nnz == 200
