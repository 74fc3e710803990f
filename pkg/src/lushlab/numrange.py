"""Numerical range, numerical radius, operator norms and the numerical index.

For a polytope ball the map ``x -> f(Tx)`` is linear on every face, so the
numerical radius is attained at an extreme duality pair: a ball vertex ``x``
together with a dual-ball vertex ``f`` with ``f(x) = 1``.  Enumerating those
pairs gives ``v(T)`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spaces import NotPolyhedralError, Space, SpaceError, sample_sphere

TAU_PAIR = 1e-9
DEFAULT_SAMPLES = 4096
STEP_FLOOR = 1e-6
REL_IMPROVEMENT = 1e-10
SWEEPS = 64


@dataclass(frozen=True, eq=False)
class DualityPair:
    x: np.ndarray
    f: np.ndarray


@dataclass(frozen=True, eq=False)
class IndexEstimate:
    """Upper bound on the numerical index with the operator that attains it."""

    value: float
    operator: np.ndarray
    exact_evaluation: bool
    trials: int
    refined: int


def as_operator(space: Space, T) -> np.ndarray:
    T = np.asarray(T, dtype=float)
    if T.shape != (space.dim, space.dim):
        raise SpaceError(f"operator must be {space.dim}x{space.dim}, got shape {T.shape}")
    return T


def _pair_arrays(space: Space) -> tuple[np.ndarray, np.ndarray]:
    V = space.ball_vertices()
    F = space.dual_ball_vertices()
    hit = np.abs(V @ F.T - 1.0) <= TAU_PAIR
    iv, jf = np.nonzero(hit)
    return V[iv], F[jf]


def duality_pairs(space: Space) -> list[DualityPair]:
    """All extreme duality pairs of a polyhedral space."""
    X, F = _pair_arrays(space)
    return [DualityPair(x.copy(), f.copy()) for x, f in zip(X, F)]


def operator_norm_is_exact(space: Space) -> bool:
    return space.is_polyhedral or space.is_euclidean


def operator_norm(space: Space, T, count: int = DEFAULT_SAMPLES, seed: int = 0) -> float:
    """``||T||``; exact on polyhedral and Euclidean spaces.

    Otherwise the maximum of ``||Tx||`` over ``count`` sphere samples, which is
    a lower bound.
    """
    T = as_operator(space, T)
    if space.is_polyhedral:
        V = space.ball_vertices()
        return float(space.norms(V @ T.T).max())
    if space.is_euclidean:
        return float(np.linalg.norm(T, 2))
    X = sample_sphere(space, count, seed)
    return float(space.norms(X @ T.T).max())


def numerical_radius_exact(space: Space, T) -> float:
    """``v(T)`` as the maximum of ``|f(Tx)|`` over extreme duality pairs."""
    T = as_operator(space, T)
    if not space.is_polyhedral:
        raise NotPolyhedralError(f"{space.label} is not polyhedral")
    X, F = _pair_arrays(space)
    return float(np.abs(np.einsum("pi,ij,pj->p", F, T, X)).max())


def numerical_radius_sampled(space: Space, T, count: int, seed: int) -> float:
    """Lower bound on ``v(T)`` from ``count`` sphere samples and norming functionals."""
    T = as_operator(space, T)
    X = sample_sphere(space, count, seed)
    if space.is_polyhedral:
        F = space.dual_ball_vertices()
        Fx = F[np.argmax(X @ F.T, axis=1)]
    else:
        Fx = np.array([space.supporting_functional(x) for x in X])
    return float(np.abs(np.einsum("pi,ij,pj->p", Fx, T, X)).max())


def numerical_radius_euclidean(T) -> float:
    """Real Hilbert space: ``v(T)`` is the spectral radius of the symmetric part."""
    T = np.asarray(T, dtype=float)
    return float(np.abs(np.linalg.eigvalsh((T + T.T) / 2)).max())


def numerical_radius(space: Space, T, count: int = DEFAULT_SAMPLES, seed: int = 0) -> float:
    if space.is_polyhedral:
        return numerical_radius_exact(space, T)
    if space.is_euclidean:
        return numerical_radius_euclidean(as_operator(space, T))
    return numerical_radius_sampled(space, T, count, seed)


class _RatioEvaluator:
    """Vectorised ``v(T) / ||T||`` for stacks of operators on one space."""

    def __init__(self, space: Space, seed: int, count: int):
        self.space = space
        if space.is_polyhedral:
            self.mode = "polyhedral"
            self.V = space.ball_vertices()
            self.F = space.dual_ball_vertices()
            self.PX, self.PF = _pair_arrays(space)
        elif space.is_euclidean:
            self.mode = "euclidean"
        else:
            self.mode = "sampled"
            self.X = sample_sphere(space, count, seed)
            self.FX = np.array([space.supporting_functional(x) for x in self.X])

    @property
    def exact(self) -> bool:
        return self.mode != "sampled"

    def __call__(self, Ts: np.ndarray) -> np.ndarray:
        Ts = np.asarray(Ts, dtype=float)
        if self.mode == "polyhedral":
            radius = np.abs(np.einsum("pi,bij,pj->bp", self.PF, Ts, self.PX)).max(axis=1)
            images = np.einsum("bij,vj->bvi", Ts, self.V)
            norms = np.einsum("fi,bvi->bvf", self.F, images).max(axis=(1, 2))
        elif self.mode == "euclidean":
            sym = (Ts + np.swapaxes(Ts, 1, 2)) / 2
            radius = np.abs(np.linalg.eigvalsh(sym)).max(axis=1)
            norms = np.linalg.norm(Ts, ord=2, axis=(1, 2))
        else:
            radius = np.abs(np.einsum("pi,bij,pj->bp", self.FX, Ts, self.X)).max(axis=1)
            images = np.einsum("bij,pj->bpi", Ts, self.X)
            norms = np.array([self.space.norms(im).max() for im in images])
        out = np.full(len(Ts), np.inf)
        ok = norms > 0
        out[ok] = radius[ok] / norms[ok]
        return out


def _descend(ratio: _RatioEvaluator, T: np.ndarray) -> tuple[np.ndarray, float]:
    """Coordinate-wise descent on ``v(T) / ||T||`` with step halving."""
    d = T.shape[0]
    best = float(ratio(T[None])[0])
    step = 0.5
    for _ in range(SWEEPS):
        before = best
        scale = np.abs(T).max()
        for i in range(d):
            for j in range(d):
                cands = np.repeat(T[None], 2, axis=0)
                cands[0, i, j] += step * scale
                cands[1, i, j] -= step * scale
                vals = ratio(cands)
                k = int(np.argmin(vals))
                if vals[k] < best:
                    best = float(vals[k])
                    T = cands[k]
        if before - best < REL_IMPROVEMENT * max(before, 1e-300):
            step /= 2
            if step < STEP_FLOOR:
                break
    return T, best


def numerical_index_upper(
    space: Space, budget: int, seed: int, refine: int = 8, samples: int = DEFAULT_SAMPLES
) -> IndexEstimate:
    """Upper bound on ``n(X)`` as the least ``v(T)/||T||`` over tried operators.

    ``budget`` Gaussian operators are drawn, trial ``t`` from the generator
    seeded with ``(seed, t)``; the ``refine`` best are then improved by
    coordinate-wise descent.  The reduction is a minimum, so the result does
    not depend on evaluation order.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    d = space.dim
    ratio = _RatioEvaluator(space, seed, samples)
    if d == 1:
        return IndexEstimate(1.0, np.ones((1, 1)), True, budget, 0)
    Ts = np.array([np.random.default_rng([seed, t]).standard_normal((d, d)) for t in range(budget)])
    vals = np.concatenate([ratio(Ts[k : k + 2048]) for k in range(0, budget, 2048)])
    order = np.argsort(vals, kind="stable")[: max(refine, 1)]
    best_val, best_T = float(vals[order[0]]), Ts[order[0]]
    for idx in order[:refine]:
        T, val = _descend(ratio, Ts[idx].copy())
        if val < best_val:
            best_val, best_T = val, T
    return IndexEstimate(best_val, best_T / np.abs(best_T).max(), ratio.exact, budget, min(refine, budget))
