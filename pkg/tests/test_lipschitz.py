import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpje.errors import PreconditionError
from dpje.lipschitz import (
    audit_lipschitz, lipschitz_bound, lipschitz_bound_strict, lipschitz_constant,
    perturbation_ratio, weighted_leverage_map,
)
from dpje.polytope import NeighborPerturbation, Polytope

from conftest import gaussian_polytope

# L for the 2x2 identity at eps0=1e-3, evaluated once with mpmath
L_IDENTITY_2 = 12.81953389449335634463577789099013023569


def test_identity_example():
    b = lipschitz_bound(Polytope(np.eye(2)), 1e-3)
    assert b.eps1 == pytest.approx(0.008)
    direct = math.sqrt(0.008**2 + (0.008 * 1.001**2 + 0.001 * 2.001) ** 2) / 1e-3
    assert b.L == pytest.approx(direct, rel=1e-12)
    assert b.L == pytest.approx(L_IDENTITY_2, rel=1e-12)


def test_small_eps0_limit():
    b = lipschitz_bound(Polytope(np.eye(2)), 1e-12)
    assert b.L == pytest.approx(math.sqrt(164), rel=1e-9)


def test_precondition():
    with pytest.raises(PreconditionError):
        lipschitz_bound(Polytope(np.eye(2)), 0.2)
    with pytest.raises(PreconditionError):
        lipschitz_bound(Polytope(np.eye(2)), 0.0)


def test_constant_override_of_row_term():
    a = lipschitz_constant(5, 2.0, 1.0, 1e-3)
    b = lipschitz_constant(5, 2.0, 1.0, 1e-3, j_scale=4.0)
    assert a.L == pytest.approx(b.L)


def test_weighted_leverage_map_examples():
    np.testing.assert_allclose(weighted_leverage_map(Polytope(np.eye(3)), np.ones(3)), 1.0)
    np.testing.assert_allclose(weighted_leverage_map(Polytope(np.eye(2)), [0.5, 0.5]), 1.0)


def test_zero_shift_ratio():
    p = gaussian_polytope(10, 3, 0)
    assert perturbation_ratio(p, NeighborPerturbation(2, np.zeros(3), 1e-4), np.ones(10)) == 0.0


def test_identity_audit_is_clean():
    rep = audit_lipschitz(Polytope(np.eye(2)), 1e-4, trials=1000, seed=0)
    assert rep.violations == []
    assert rep.max_ratio <= rep.L


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(0, 20))
def test_random_audit_is_clean(seed, d, extra):
    p = gaussian_polytope(d + extra, d, seed)
    smin = np.linalg.svd(p.A, compute_uv=False)[-1]
    rep = audit_lipschitz(p, 1e-4 * smin, trials=50, seed=seed)
    assert rep.violations == []


def test_strict_bound_is_finite_and_positive():
    p = gaussian_polytope(20, 3, 2)
    s = lipschitz_bound_strict(p, np.full(20, 0.5), 1e-4)
    assert np.isfinite(s.L) and s.L > 0


def test_audit_is_reproducible():
    p = gaussian_polytope(15, 3, 4)
    a = audit_lipschitz(p, 1e-5, trials=20, seed=9)
    b = audit_lipschitz(p, 1e-5, trials=20, seed=9)
    assert a.max_ratio == b.max_ratio
    assert a.as_dict()["trials"] == 20
