import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import HalfspaceIntersection

from lushlab.polytope import (
    GeneratorSet,
    Slice,
    abs_conv_gauge,
    abs_conv_projection,
    ball_edges,
    caratheodory_prune,
    dist_to_abs_conv,
    euclidean_cap_generators,
    slice_generators,
    slice_membership,
)
from lushlab.spaces import LINF, SpaceError, direct_sum, lp, regular_polygon

import oracles

SPACES = [lp(2, 1), lp(3, "inf"), lp(3, 1), regular_polygon(6), direct_sum(lp(1, 1), lp(2, "inf"), LINF)]


def _slice_vertices_oracle(space, f, c):
    """Vertices of ``{F x <= 1, f x >= c}`` from scipy's half-space intersection."""
    F = space.dual_ball_vertices()
    halfspaces = np.vstack([np.hstack([F, -np.ones((len(F), 1))]), np.r_[-f, c]])
    # a shrunken maximiser of f is interior to both the ball and the slice
    V = space.ball_vertices()
    centre = 0.95 * V[np.argmax(V @ f)]
    return HalfspaceIntersection(halfspaces, centre).intersections


@pytest.mark.parametrize("space", SPACES, ids=lambda s: s.label)
def test_slice_generators_match_halfspace_oracle(space):
    rng = np.random.default_rng(1)
    for _ in range(5):
        f = space.supporting_functional(rng.standard_normal(space.dim))
        slc = Slice(f, 0.3)
        gens = slice_generators(space, slc).points
        ref = _slice_vertices_oracle(space, f, slc.level)
        for p in ref:
            assert np.min(np.abs(gens - p).max(axis=1)) < 1e-7
        assert np.all(space.norms(gens) <= 1 + 1e-9)
        assert np.all(gens @ f >= slc.level - 1e-9)


def test_slice_membership_closed_with_slack():
    space = lp(2, "inf")
    slc = Slice(np.array([1.0, 0.0]), 0.1)
    assert slice_membership(space, slc, [0.9, 0.0])
    assert not slice_membership(space, slc, [0.8, 0.0])
    assert not slice_membership(space, slc, [1.0, 1.5])


def test_edges_of_square_and_cube():
    assert len(ball_edges(lp(2, "inf"))) == 4
    assert len(ball_edges(lp(3, "inf"))) == 12
    assert len(ball_edges(lp(3, 1))) == 12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(range(len(SPACES))))
def test_lp_distance_matches_highs(seed, which):
    space = SPACES[which]
    rng = np.random.default_rng(seed)
    gens = rng.standard_normal((rng.integers(1, 5), space.dim))
    v = 2 * rng.standard_normal(space.dim)
    res = abs_conv_projection(space, v, GeneratorSet(gens))
    ref = oracles.abs_conv_distance(space.dual_ball_vertices(), v, gens)
    assert res.distance == pytest.approx(ref, abs=1e-8)
    assert np.abs(res.coefficients).sum() <= 1 + 1e-9
    assert space.norm(v - res.coefficients @ gens) == pytest.approx(res.distance, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_frank_wolfe_matches_planar_hull(seed):
    rng = np.random.default_rng(seed)
    gens = rng.standard_normal((4, 2))
    v = 2 * rng.standard_normal(2)
    d = dist_to_abs_conv(lp(2, 2), v, GeneratorSet(gens))
    ref = oracles.euclidean_hull_distance_2d(np.vstack([gens, -gens]), v)
    assert d == pytest.approx(ref, abs=2e-6)


def test_mixed_non_polyhedral_distance_unsupported():
    Z = direct_sum(lp(2, 2), lp(1, 1), LINF)
    with pytest.raises(SpaceError):
        abs_conv_projection(Z, np.ones(3), GeneratorSet(np.eye(3)))


def test_euclidean_cap_arc():
    space = lp(2, 2)
    gens = euclidean_cap_generators(space, Slice(np.array([1.0, 0.0]), 0.25), count=9).points
    np.testing.assert_allclose(np.linalg.norm(gens, axis=1), 1.0)
    assert gens[:, 0].min() == pytest.approx(0.75)


def test_gauge_membership():
    square = GeneratorSet(np.array([[1.0, 1.0], [1.0, -1.0]]))
    assert abs_conv_gauge([1.0, 0.0], square)[0] == pytest.approx(1.0)
    assert abs_conv_gauge([2.0, 2.0], square)[0] == pytest.approx(2.0)
    assert abs_conv_gauge([1.0, 0.0], GeneratorSet(np.array([[0.0, 1.0]])))[0] == np.inf


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 4))
def test_caratheodory_prune_preserves_combination(seed, d):
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((12, d))
    theta = rng.standard_normal(12)
    theta /= np.abs(theta).sum()
    Zp, tp = caratheodory_prune(Z, theta)
    assert len(tp) <= d + 1
    np.testing.assert_allclose(tp @ Zp, theta @ Z, atol=1e-9)
    assert np.abs(tp).sum() <= np.abs(theta).sum() + 1e-12


@pytest.mark.parametrize(
    "space, f, alpha, expected",
    [
        (lp(2, "inf"), [1.0, 0.0], 0.5, [[1, 1], [1, -1], [0.5, 1], [0.5, -1]]),
        # the half-ball: only the two vertices with x1 >= 0 plus the cuts (0, +-1)
        (lp(2, "inf"), [1.0, 0.0], 1.0, [[1, 1], [1, -1], [0, 1], [0, -1]]),
        # the top edge of the l1 ball, plus cuts 5e-5 away from its end points
        (lp(2, 1), [1.0, 1.0], 1e-4, [[1, 0], [0, 1], [0.99995, -5e-5], [-5e-5, 0.99995]]),
    ],
)
def test_slice_generator_examples(space, f, alpha, expected):
    gens = slice_generators(space, Slice(np.array(f), alpha)).points
    assert len(gens) == len(expected)
    for p in expected:
        assert np.min(np.abs(gens - p).max(axis=1)) < 1e-12


def test_distance_zero_for_negated_generator():
    gens = GeneratorSet(np.array([[1.0, 1.0], [1.0, -1.0], [0.5, 1.0], [0.5, -1.0]]))
    assert dist_to_abs_conv(lp(2, "inf"), [-1.0, 1.0], gens) == pytest.approx(0.0, abs=1e-12)
