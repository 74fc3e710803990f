import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog as highs

from lushlab.simplex import LPError, linprog, solve


def _random_lp(seed, m, n):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    x0 = rng.uniform(0, 1, n)
    b = A @ x0 + rng.uniform(0, 1, m)
    # a box row keeps the problem bounded
    A = np.vstack([A, np.ones(n)])
    b = np.r_[b, x0.sum() + 5]
    return rng.standard_normal(n), A, b


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 6), st.integers(1, 6))
def test_matches_highs_on_feasible_bounded(seed, m, n):
    c, A, b = _random_lp(seed, m, n)
    ours = linprog(c, A_ub=A, b_ub=b)
    ref = highs(c, A_ub=A, b_ub=b, bounds=[(0, None)] * n, method="highs")
    assert ours.success and ref.status == 0
    assert ours.fun == pytest.approx(ref.fun, abs=1e-8)
    assert np.all(A @ ours.x <= b + 1e-9)
    assert np.all(ours.x >= -1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_equality_constraints(seed):
    rng = np.random.default_rng(seed)
    n = 5
    A_eq = rng.standard_normal((2, n))
    x0 = rng.uniform(0, 1, n)
    c = rng.uniform(0.1, 1, n)
    ours = linprog(c, A_eq=A_eq, b_eq=A_eq @ x0)
    ref = highs(c, A_eq=A_eq, b_eq=A_eq @ x0, bounds=[(0, None)] * n, method="highs")
    assert ours.fun == pytest.approx(ref.fun, abs=1e-8)
    np.testing.assert_allclose(A_eq @ ours.x, A_eq @ x0, atol=1e-9)


def test_infeasible():
    res = linprog([1.0], A_ub=[[1.0]], b_ub=[-1.0])
    assert res.status == "infeasible"
    with pytest.raises(LPError):
        solve([1.0], A_ub=[[1.0]], b_ub=[-1.0])


def test_unbounded():
    assert linprog([-1.0, 0.0], A_ub=[[0.0, 1.0]], b_ub=[1.0]).status == "unbounded"


def test_degenerate_cycling_example():
    # Beale's example cycles under the textbook rule
    c = np.array([-0.75, 150, -0.02, 6])
    A = np.array([[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]])
    b = np.array([0, 0, 1.0])
    res = solve(c, A_ub=A, b_ub=b)
    assert res.fun == pytest.approx(-0.05)
