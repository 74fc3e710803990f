"""Slices of unit balls and distances to absolutely convex hulls.

All computational sets are closed: a slice ``{x in B : f(x) > 1 - alpha}`` is
handled through its closure, which has the same distance function.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import simplex
from .spaces import NotPolyhedralError, Space, SpaceError, TAU_NORM

TAU_SLICE = 1e-9
TAU_DIST = 1e-6
FW_MAX_ITER = 100_000


class ConvergenceError(RuntimeError):
    """An iterative distance computation hit its iteration cap."""


@dataclass(frozen=True, eq=False)
class Slice:
    functional: np.ndarray
    alpha: float

    def __post_init__(self):
        f = np.asarray(self.functional, dtype=float)
        object.__setattr__(self, "functional", f)
        if not self.alpha > 0:
            raise ValueError("slice depth alpha must be positive")
        if not np.any(f):
            raise ValueError("slice functional must be nonzero")

    @property
    def level(self) -> float:
        return 1.0 - self.alpha


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.size == 0:
            raise ValueError("generator set is empty")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True, eq=False)
class HullDistance:
    """Nearest point ``coefficients @ points`` of ``co(+-points)`` to a target."""

    distance: float
    coefficients: np.ndarray
    converged: bool = True
    iterations: int = 0
    method: str = "lp"
    extra: dict = field(default_factory=dict)


def slice_membership(space: Space, slc: Slice, x) -> bool:
    x = space._check(x)
    f = space._check(slc.functional)
    return space.norm(x) <= 1 + TAU_NORM and float(f @ x) > slc.level - TAU_SLICE


@lru_cache(maxsize=256)
def ball_edges(space: Space) -> np.ndarray:
    """Index pairs ``(i, j)`` of ball vertices joined by an edge.

    Two vertices span an edge exactly when the facets containing both have
    normals of rank ``dim - 1``.
    """
    V = space.ball_vertices()
    F = space.dual_ball_vertices()
    d = space.dim
    inc = np.abs(V @ F.T - 1.0) <= TAU_NORM
    edges = []
    for i in range(len(V)):
        for j in range(i + 1, len(V)):
            common = inc[i] & inc[j]
            n = int(common.sum())
            if n < d - 1:
                continue
            rank = 0 if n == 0 else np.linalg.matrix_rank(F[common], tol=1e-9)
            if rank == d - 1:
                edges.append((i, j))
    out = np.array(edges, dtype=int).reshape(-1, 2)
    out.setflags(write=False)
    return out


def slice_generators(space: Space, slc: Slice) -> GeneratorSet:
    """Vertices of the closed slice ``{x in B : f(x) >= 1 - alpha}``.

    These are the ball vertices on the right side of the cutting hyperplane
    together with the points where the hyperplane crosses ball edges.
    """
    if not space.is_polyhedral:
        raise NotPolyhedralError(f"{space.label} is not polyhedral")
    V = space.ball_vertices()
    f = space._check(slc.functional)
    c = slc.level
    vals = V @ f
    pts = [v for v, s in zip(V, vals) if s >= c - TAU_SLICE]
    for i, j in ball_edges(space):
        a, b = vals[i] - c, vals[j] - c
        if (a > TAU_SLICE and b < -TAU_SLICE) or (a < -TAU_SLICE and b > TAU_SLICE):
            if a < 0:
                i, j, a, b = j, i, b, a
            t = a / (a - b)
            p = V[i] + t * (V[j] - V[i])
            # step back toward the inner vertex until f(p) >= level holds in floating point
            for _ in range(64):
                if p @ f >= c:
                    break
                t = np.nextafter(t, 0.0)
                p = V[i] + t * (V[j] - V[i])
            pts.append(p)
    uniq: list[np.ndarray] = []
    for p in pts:
        if not any(np.max(np.abs(p - q)) <= 1e-12 for q in uniq):
            uniq.append(p)
    return GeneratorSet(np.array(uniq))


def euclidean_cap_generators(space: Space, slc: Slice, count: int = 64, seed: int = 0) -> GeneratorSet:
    """A finite approximation of the closed slice of a Euclidean ball.

    The slice is the convex hull of the spherical cap ``{x in S : f(x) >= c}``.
    In the plane the cap is an arc and is discretised evenly (both endpoints
    included); in higher dimensions cap points are drawn along seeded random
    directions orthogonal to ``f``.
    """
    if not space.is_euclidean:
        raise SpaceError("cap discretisation needs a Euclidean space")
    f = np.asarray(slc.functional, dtype=float)
    f = f / np.linalg.norm(f)
    c = max(min(slc.level, 1.0), -1.0)
    half = float(np.arccos(c))
    if space.dim == 1:
        return GeneratorSet(f.reshape(1, 1) if half < np.pi / 2 else np.array([[1.0], [-1.0]]))
    if space.dim == 2:
        w = np.array([-f[1], f[0]])
        t = np.linspace(-half, half, count)
        return GeneratorSet(np.cos(t)[:, None] * f + np.sin(t)[:, None] * w)
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((count, space.dim))
    W -= np.outer(W @ f, f)
    W /= np.linalg.norm(W, axis=1)[:, None]
    t = half * np.sqrt(rng.random(count))
    t[: count // 2] = half
    pts = np.cos(t)[:, None] * f + np.sin(t)[:, None] * W
    return GeneratorSet(np.vstack([f, pts]))


def abs_conv_projection(space: Space, v, gens: GeneratorSet) -> HullDistance:
    """Nearest point of ``co({+-g : g in gens})`` to ``v`` in the norm of ``space``."""
    v = space._check(v)
    if gens.dim != space.dim:
        raise SpaceError("generator dimension does not match the space")
    if space.is_polyhedral:
        return _lp_distance(space, v, gens.points)
    if space.is_euclidean:
        return _frank_wolfe_distance(v, gens.points)
    raise SpaceError(f"no distance routine for mixed non-polyhedral space {space.label}")


def dist_to_abs_conv(space: Space, v, gens: GeneratorSet) -> float:
    res = abs_conv_projection(space, v, gens)
    if not res.converged:
        raise ConvergenceError(
            f"Frank-Wolfe stopped after {res.iterations} iterations "
            f"with gap bound {res.extra.get('bound'):.3g}"
        )
    return res.distance


def _lp_distance(space: Space, v: np.ndarray, G: np.ndarray) -> HullDistance:
    # minimize t  s.t.  f_j(v - G^T (c+ - c-)) <= t  for every dual vertex f_j,
    #                   sum(c+) + sum(c-) <= 1,  c+, c-, t >= 0
    F = space.dual_ball_vertices()
    m = len(G)
    FG = F @ G.T
    A = np.hstack([-FG, FG, -np.ones((len(F), 1))])
    b = -(F @ v)
    A = np.vstack([A, np.concatenate([np.ones(2 * m), [0.0]])])
    b = np.concatenate([b, [1.0]])
    cost = np.zeros(2 * m + 1)
    cost[-1] = 1.0
    res = simplex.solve(cost, A_ub=A, b_ub=b)
    theta = res.x[:m] - res.x[m : 2 * m]
    # report the exact residual norm of the returned combination
    resid = float((F @ (v - theta @ G)).max())
    return HullDistance(max(resid, 0.0), theta, True, res.iterations, "lp")


def _frank_wolfe_distance(v: np.ndarray, G: np.ndarray) -> HullDistance:
    """Pairwise Frank-Wolfe on ``min 1/2 ||w - v||^2`` over ``co(+-G)``."""
    atoms = np.vstack([G, -G])
    m = len(G)
    start = int(np.argmin(np.linalg.norm(atoms - v, axis=1)))
    lam = np.zeros(2 * m)
    lam[start] = 1.0
    w = atoms[start].copy()
    bound = np.inf
    it = 0
    for it in range(1, FW_MAX_ITER + 1):
        grad = w - v
        r = float(np.linalg.norm(grad))
        scores = atoms @ grad
        s = int(np.argmin(scores))
        gap = float(grad @ w - scores[s])
        bound = min(np.sqrt(2 * max(gap, 0.0)), 2 * max(gap, 0.0) / r) if r > 0 else 0.0
        if bound <= TAU_DIST or r <= TAU_DIST:
            break
        active = np.flatnonzero(lam > 0)
        a = int(active[np.argmax(scores[active])])
        d = atoms[s] - atoms[a]
        dd = float(d @ d)
        if dd == 0.0:
            break
        gamma = min(max(-float(grad @ d) / dd, 0.0), lam[a])
        lam[s] += gamma
        lam[a] -= gamma
        w = lam @ atoms
    else:
        it = FW_MAX_ITER
    converged = bound <= TAU_DIST or float(np.linalg.norm(w - v)) <= TAU_DIST
    theta = lam[:m] - lam[m:]
    dist = float(np.linalg.norm(theta @ G - v))
    return HullDistance(dist, theta, converged, it, "frank-wolfe", {"bound": float(bound)})


def abs_conv_gauge(x, gens: GeneratorSet) -> tuple[float, np.ndarray]:
    """Smallest ``sum |c_i|`` with ``sum c_i g_i = x`` (``inf`` if unreachable).

    ``x`` lies in ``co(+-gens)`` exactly when the gauge is at most one.
    """
    x = np.asarray(x, dtype=float)
    G = gens.points.T
    m = G.shape[1]
    res = simplex.linprog(np.ones(2 * m), A_eq=np.hstack([G, -G]), b_eq=x)
    if res.status == "infeasible":
        return float("inf"), np.zeros(m)
    if not res.success:
        raise simplex.LPError(res.status)
    return float(res.fun), res.x[:m] - res.x[m:]


def caratheodory_prune(points, coefficients, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Shrink the support of ``sum theta_k z_k`` to at most ``dim + 1`` points.

    The signed points ``sign(theta_k) z_k`` carry weights ``|theta_k|``; affine
    dependencies are removed one at a time, which preserves both the
    combination and ``sum |theta_k|``.
    """
    Z = np.asarray(points, dtype=float)
    theta = np.asarray(coefficients, dtype=float)
    keep = np.abs(theta) > tol
    Z, theta = Z[keep], theta[keep]
    d = Z.shape[1] if Z.ndim == 2 else 0
    atoms = np.sign(theta)[:, None] * Z
    w = np.abs(theta)
    while len(w) > d + 1:
        M = np.vstack([atoms.T, np.ones(len(w))])
        _, _, vt = np.linalg.svd(M)
        mu = vt[-1]
        if mu.max() <= tol:
            mu = -mu
        pos = np.flatnonzero(mu > tol)
        ratios = w[pos] / mu[pos]
        drop = int(pos[np.argmin(ratios)])
        w = w - ratios.min() * mu
        live = np.ones(len(w), dtype=bool)
        live[drop] = False
        live &= w > tol
        atoms, w, Z, theta = atoms[live], w[live], Z[live], theta[live]
    return Z, np.sign(theta) * w
