import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpje.errors import TraceError
from dpje.exact_je import (
    check_optimality, default_iterations, dual_objective, exact_iterate,
    objective_descent, read_trace, write_trace,
)
from dpje.numerics import leverage
from dpje.polytope import Polytope

from conftest import gaussian_polytope


def _normalized(u, d):
    return d * u / np.sum(u)


@pytest.mark.parametrize("d", [1, 3, 6])
def test_identity_is_a_fixed_point(d):
    res = exact_iterate(Polytope(np.eye(d)), 7, keep_trace=True)
    np.testing.assert_array_equal(res.trace, np.ones((7, d)))
    np.testing.assert_array_equal(res.u, np.ones(d))


def test_three_row_square_converges():
    p = Polytope([[1, 0], [0, 1], [0.7071, 0.7071]])
    res = exact_iterate(p, 200)
    assert np.max(leverage(p, _normalized(res.u, 2))) <= 1 + 1e-3


def test_random_instance_with_default_iterations():
    p = gaussian_polytope(20, 3, 5)
    T = default_iterations(20, 3, 0.1)
    assert T == 5097
    res = exact_iterate(p, T)
    assert np.max(leverage(p, _normalized(res.u, 3))) <= 1.1
    assert check_optimality(p, res.w_last, 1e-2).optimal


def test_matches_convex_solver():
    # the fixed point maximizes log det(A^T W A) subject to sum(w) = d
    cp = pytest.importorskip("cvxpy")
    p = gaussian_polytope(20, 3, 5)
    w = cp.Variable(20, nonneg=True)
    prob = cp.Problem(cp.Maximize(cp.log_det(p.A.T @ cp.diag(w) @ p.A)), [cp.sum(w) == 3])
    prob.solve(solver="CLARABEL")
    res = exact_iterate(p, 20000)
    ours = np.linalg.slogdet(p.A.T @ (res.w_last[:, None] * p.A))[1]
    assert ours == pytest.approx(prob.value, abs=1e-6)
    np.testing.assert_allclose(res.w_last, w.value, atol=1e-3)


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(0, 15))
def test_iterates_keep_sum_d(seed, d, extra):
    p = gaussian_polytope(d + extra, d, seed)
    res = exact_iterate(p, 6, keep_trace=True)
    np.testing.assert_allclose(res.trace.sum(axis=1), d, rtol=1e-9)
    assert np.all(res.trace > 0)


def test_default_iterations_formula():
    assert default_iterations(200, 10, 0.1) == math.ceil(
        16 * math.log(20) / 0.1 + 16 * math.log(20) / 0.01)
    with pytest.raises(ValueError):
        default_iterations(10, 2, 1.5)


def test_dual_objective_values():
    assert dual_objective(Polytope(np.eye(4)), np.ones(4)) == pytest.approx(0.0, abs=1e-15)
    assert dual_objective(Polytope(np.eye(2)), [2, 3]) == pytest.approx(3 - math.log(6))


def test_objective_descent_runs_on_trace():
    p = gaussian_polytope(25, 3, 1)
    res = exact_iterate(p, 30, keep_trace=True)
    vals, ups = objective_descent(p, res.trace)
    assert vals.shape == (30,)
    assert vals[-1] <= vals[0]
    assert ups >= 0


def test_check_optimality_examples():
    assert check_optimality(Polytope(np.eye(3)), np.ones(3), tol=1e-9).optimal
    cert = check_optimality(Polytope(np.eye(2)), [1.5, 0.5], tol=1e-3)
    assert not cert.optimal
    assert cert.max_h == pytest.approx(2.0)
    with pytest.raises(ValueError):
        check_optimality(Polytope(np.eye(2)), [1.0, 0.5])


def test_redundant_row_is_inactive():
    # a row strictly inside the box is redundant and its weight decays to zero
    p = Polytope([[1, 0], [0, 1], [0.3, 0.3]])
    res = exact_iterate(p, 3000)
    cert = check_optimality(p, res.w_last, tol=1e-9)
    assert cert.optimal
    assert res.w_last[2] < 1e-12


def test_trace_round_trip(tmp_path):
    tr = np.random.default_rng(0).random((4, 3))
    write_trace(tmp_path / "t.csv", tr)
    np.testing.assert_array_equal(read_trace(tmp_path / "t.csv"), tr)


def test_trace_with_gap_is_rejected(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("iteration,i,w\n1,0,0.5\n2,1,0.5\n", encoding="utf-8")
    with pytest.raises(TraceError):
        read_trace(path)
