import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dpje.errors import DimensionError, PreconditionError, SingularError
from dpje.numerics import gram, inv_sqrt, leverage, perturb_bounds
from dpje.polytope import Polytope

seeds = st.integers(0, 2**32 - 1)
shapes = st.tuples(st.integers(1, 6), st.integers(0, 30)).map(lambda t: (t[0] + t[1], t[0]))


def _instance(seed, shape):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal(shape)
    w = rng.uniform(0.05, 2.0, shape[0])
    return A, w


def test_gram_matches_outer_product_sum():
    A, w = _instance(0, (9, 3))
    Q = sum(wi * np.outer(a, a) for wi, a in zip(w, A))
    np.testing.assert_allclose(gram(A, w), Q, rtol=1e-13)


def test_gram_accepts_polytope_and_checks_shape():
    p = Polytope(np.eye(2))
    np.testing.assert_array_equal(gram(p, [1, 1]), np.eye(2))
    with pytest.raises(DimensionError):
        gram(p, [1, 1, 1])
    with pytest.raises(ValueError):
        gram(p, [1, -1])


def test_gram_singular_weights():
    with pytest.raises(SingularError):
        gram(np.eye(3), [1, 1, 0])


@given(seeds, shapes)
def test_weighted_leverage_sums_to_d(seed, shape):
    A, w = _instance(seed, shape)
    assert np.sum(w * leverage(A, w)) == pytest.approx(shape[1], rel=1e-9)


@given(seeds, shapes)
def test_weighted_leverage_in_unit_interval(seed, shape):
    A, w = _instance(seed, shape)
    f = w * leverage(A, w)
    assert np.all(f >= 0) and np.all(f <= 1 + 1e-10)


@given(seeds, shapes)
def test_leverage_matches_direct_solve(seed, shape):
    A, w = _instance(seed, shape)
    Q = A.T @ (w[:, None] * A)
    direct = np.einsum("ij,ij->i", A, np.linalg.solve(Q, A.T).T)
    np.testing.assert_allclose(leverage(A, w), direct, rtol=1e-8)


@given(seeds, st.floats(0.01, 100))
def test_leverage_scale_invariance(seed, c):
    A, w = _instance(seed, (12, 3))
    np.testing.assert_allclose(leverage(A, c * w), leverage(A, w) / c, rtol=1e-9)


def test_inv_sqrt_identity():
    M = np.random.default_rng(0).standard_normal((5, 5))
    Q = M @ M.T + np.eye(5)
    R = inv_sqrt(Q)
    np.testing.assert_allclose(R @ Q @ R, np.eye(5), atol=1e-12)
    np.testing.assert_array_equal(R, R.T)
    with pytest.raises(SingularError):
        inv_sqrt(np.diag([1.0, 0.0]))


@given(seeds, st.floats(1e-6, 0.09))
def test_perturbation_bounds_hold(seed, frac):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((15, 4))
    E = rng.standard_normal((15, 4))
    smin = np.linalg.svd(A, compute_uv=False)[-1]
    B = A + E * (frac * smin / np.linalg.norm(E, 2))
    assert perturb_bounds(A, B).all_ok


def test_weyl_is_tight_for_diagonal_shift():
    A = np.diag([3.0, 2.0, 1.0])
    b = perturb_bounds(A, A + 0.05 * np.eye(3))
    assert b.weyl_lhs == pytest.approx(0.05)
    assert b.weyl_ok


def test_perturbation_precondition():
    with pytest.raises(PreconditionError):
        perturb_bounds(np.eye(2), np.eye(2) * 1.5)
    with pytest.raises(DimensionError):
        perturb_bounds(np.eye(2), np.eye(3))
