"""Finite-dimensional real normed spaces and their duals.

A :class:`Space` wraps one of three descriptors:

* :class:`Lp` -- ``l1``, ``l2`` or ``linf`` on ``R^dim``;
* :class:`Polytope` -- the norm whose unit ball is the convex hull of a
  centrally symmetric vertex set;
* :class:`Sum` -- the ``l1``- or ``linf``-direct sum of two spaces, with the
  left summand occupying the leading coordinates.

Polyhedral spaces (everything without a Euclidean component of dimension
two or more) cache their ball vertices and the vertices of the dual ball.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

from . import simplex

TAU_NORM = 1e-9
PIVOT_TOL = 1e-12
MAX_DIM = 8
# combinations examined by the polar vertex enumeration
MAX_COMBINATIONS = 250_000

L1 = "l1"
LINF = "linf"


class SpaceError(ValueError):
    """A descriptor or a vector does not fit the space."""


class NotPolyhedralError(SpaceError):
    """Raised by exact polytope routines on spaces with a curved ball."""


@dataclass(frozen=True)
class Lp:
    dim: int
    p: float


@dataclass(frozen=True)
class Polytope:
    vertices: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class Sum:
    left: "Space"
    right: "Space"
    kind: str


Descriptor = Union[Lp, Polytope, Sum]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


def polar_vertices(rows: np.ndarray, tol: float = TAU_NORM) -> np.ndarray:
    """Vertices of ``{y : r @ y <= 1 for every row r}``.

    Every vertex solves ``r @ y = 1`` for ``d`` linearly independent rows, so
    all ``d``-subsets are tried and the feasible solutions kept.  Applied to
    ball vertices this returns the facet functionals (the dual vertices);
    applied to facet functionals it returns the ball vertices.  The region
    must be bounded, i.e. the rows must span.
    """
    rows = np.asarray(rows, dtype=float)
    m, d = rows.shape
    if math.comb(m, d) > MAX_COMBINATIONS:
        raise SpaceError(f"{m} generators in dimension {d} exceed the enumeration cap")
    combos = np.array(list(itertools.combinations(range(m), d)), dtype=int).reshape(-1, d)
    systems = rows[combos]
    dets = np.linalg.det(systems)
    scale = np.prod(np.linalg.norm(systems, axis=2), axis=1)
    ok = np.abs(dets) > 1e-10 * np.maximum(scale, 1e-300)
    if not ok.any():
        raise SpaceError("generators do not span the space")
    sols = np.linalg.solve(systems[ok], np.ones((int(ok.sum()), d, 1)))[..., 0]
    feasible = (sols @ rows.T).max(axis=1) <= 1.0 + tol
    found: list[np.ndarray] = []
    for y in sols[feasible]:
        if not any(np.max(np.abs(y - z)) <= 1e-8 for z in found):
            found.append(y)
    return np.array(found).reshape(-1, d)


class Space:
    """An immutable finite-dimensional real normed space."""

    def __init__(self, descriptor: Descriptor):
        self.descriptor = descriptor
        if isinstance(descriptor, Lp):
            if descriptor.p not in (1, 2, math.inf):
                raise SpaceError(f"unsupported exponent p={descriptor.p}")
            dim = int(descriptor.dim)
        elif isinstance(descriptor, Polytope):
            if not descriptor.vertices:
                raise SpaceError("empty vertex set")
            dim = len(descriptor.vertices[0])
            if any(len(v) != dim for v in descriptor.vertices):
                raise SpaceError("vertices of different dimensions")
        elif isinstance(descriptor, Sum):
            if descriptor.kind not in (L1, LINF):
                raise SpaceError(f"unknown sum kind {descriptor.kind!r}")
            dim = descriptor.left.dim + descriptor.right.dim
        else:
            raise SpaceError(f"unknown descriptor {descriptor!r}")
        if dim < 1:
            raise SpaceError("dimension must be positive")
        if dim > MAX_DIM:
            raise SpaceError(f"dimension {dim} exceeds the supported maximum {MAX_DIM}")
        self.dim = dim
        if isinstance(descriptor, Polytope):
            self._validate_polytope()

    def __eq__(self, other):
        return isinstance(other, Space) and other.descriptor == self.descriptor

    def __hash__(self):
        return hash(self.descriptor)

    def __repr__(self):
        return f"Space({self.label})"

    @property
    def label(self) -> str:
        d = self.descriptor
        if isinstance(d, Lp):
            p = "inf" if d.p == math.inf else str(int(d.p))
            return f"l{p}^{d.dim}"
        if isinstance(d, Polytope):
            return f"polytope[{len(d.vertices)}]^{self.dim}"
        op = "(+)1" if d.kind == L1 else "(+)inf"
        return f"({d.left.label} {op} {d.right.label})"

    # ------------------------------------------------------------------
    # structure

    @cached_property
    def is_polyhedral(self) -> bool:
        d = self.descriptor
        if isinstance(d, Lp):
            return d.p != 2 or d.dim == 1
        if isinstance(d, Polytope):
            return True
        return d.left.is_polyhedral and d.right.is_polyhedral

    @property
    def is_euclidean(self) -> bool:
        d = self.descriptor
        return isinstance(d, Lp) and d.p == 2

    def _require_polyhedral(self):
        if not self.is_polyhedral:
            raise NotPolyhedralError(f"{self.label} is not polyhedral")

    @cached_property
    def _vertices(self) -> np.ndarray:
        d = self.descriptor
        if isinstance(d, Lp):
            n = d.dim
            if d.p == 1 or n == 1:
                eye = np.eye(n)
                return np.array([s * e for e in eye for s in (1.0, -1.0)])
            return np.array(list(itertools.product((1.0, -1.0), repeat=n)))
        if isinstance(d, Polytope):
            return np.array(d.vertices, dtype=float)
        return _sum_extremes(d.left.ball_vertices(), d.right.ball_vertices(), product=d.kind == LINF)

    @cached_property
    def _dual_vertices(self) -> np.ndarray:
        d = self.descriptor
        if isinstance(d, Lp):
            n = d.dim
            if d.p == math.inf or n == 1:
                eye = np.eye(n)
                return np.array([s * e for e in eye for s in (1.0, -1.0)])
            return np.array(list(itertools.product((1.0, -1.0), repeat=n)))
        if isinstance(d, Polytope):
            return polar_vertices(self._vertices)
        return _sum_extremes(
            d.left.dual_ball_vertices(), d.right.dual_ball_vertices(), product=d.kind == L1
        )

    def ball_vertices(self) -> np.ndarray:
        """Extreme points of the closed unit ball, one per row."""
        self._require_polyhedral()
        return _readonly(self._vertices)

    def dual_ball_vertices(self) -> np.ndarray:
        """Extreme points of the dual unit ball (facet functionals), one per row."""
        self._require_polyhedral()
        return _readonly(self._dual_vertices)

    def _validate_polytope(self):
        V = np.array(self.descriptor.vertices, dtype=float)
        if not np.all(np.isfinite(V)):
            raise SpaceError("vertices must be finite")
        if np.linalg.matrix_rank(V, tol=1e-9) < self.dim:
            raise SpaceError("vertex set does not span the space")
        for i, v in enumerate(V):
            diffs = np.max(np.abs(V + v), axis=1)
            if diffs.min() > 1e-9:
                raise SpaceError(f"vertex set is not symmetric: -{v.tolist()} missing")
            same = np.flatnonzero(np.max(np.abs(V - v), axis=1) <= 1e-12)
            if same.size > 1:
                raise SpaceError(f"vertex {v.tolist()} listed more than once")
        F = self._dual_vertices
        vals = V @ F.T
        for i, v in enumerate(V):
            top = vals[i].max()
            if abs(top - 1.0) > 1e-9:
                raise SpaceError(f"vertex {v.tolist()} is not on the unit sphere (norm {top:.12g})")
            active = F[np.abs(vals[i] - 1.0) <= 1e-9]
            if np.linalg.matrix_rank(active, tol=1e-9) < self.dim:
                raise SpaceError(f"vertex {v.tolist()} is not an extreme point")

    def dual(self) -> "Space":
        """The dual space, with its ball described explicitly."""
        d = self.descriptor
        if isinstance(d, Lp):
            q = {1: math.inf, 2: 2, math.inf: 1}[d.p]
            return Space(Lp(d.dim, q))
        if isinstance(d, Polytope):
            return Space(Polytope(tuple(tuple(float(c) for c in f) for f in self._dual_vertices)))
        return Space(Sum(d.left.dual(), d.right.dual(), LINF if d.kind == L1 else L1))

    # ------------------------------------------------------------------
    # evaluation

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise SpaceError(f"expected a vector of dimension {self.dim}, got shape {x.shape}")
        return x

    def norm(self, x) -> float:
        x = self._check(x)
        if x.ndim != 1:
            raise SpaceError("norm expects a single vector; use norms() for batches")
        return float(self._norm(x))

    def norms(self, X) -> np.ndarray:
        """Row-wise norms of a 2-D array.

        Polytope balls are evaluated through their facet functionals here
        (``||x|| = max_f f(x)``) instead of one linear program per row.
        """
        X = np.atleast_2d(self._check(X))
        d = self.descriptor
        if isinstance(d, Polytope):
            return (X @ self._dual_vertices.T).max(axis=1)
        if isinstance(d, Sum):
            a = d.left.norms(X[:, : d.left.dim])
            b = d.right.norms(X[:, d.left.dim :])
            return a + b if d.kind == L1 else np.maximum(a, b)
        return np.array([self._norm(x) for x in X])

    def _norm(self, x: np.ndarray) -> float:
        d = self.descriptor
        if isinstance(d, Lp):
            if d.p == 1:
                return float(np.abs(x).sum())
            if d.p == 2:
                return float(np.linalg.norm(x))
            return float(np.abs(x).max())
        if isinstance(d, Polytope):
            return _generator_norm(self._vertices, x)
        a = d.left._norm(x[: d.left.dim])
        b = d.right._norm(x[d.left.dim :])
        return a + b if d.kind == L1 else max(a, b)

    def dual_norm(self, f) -> float:
        f = self._check(f)
        d = self.descriptor
        if isinstance(d, Lp):
            if d.p == 1:
                return float(np.abs(f).max())
            if d.p == 2:
                return float(np.linalg.norm(f))
            return float(np.abs(f).sum())
        if isinstance(d, Polytope):
            return float((self._vertices @ f).max())
        a = d.left.dual_norm(f[: d.left.dim])
        b = d.right.dual_norm(f[d.left.dim :])
        return max(a, b) if d.kind == L1 else a + b

    def supporting_functional(self, x) -> np.ndarray:
        """A unit functional ``f`` with ``f(x) = ||x||``.

        On polyhedral pieces the functional is an extreme point of the dual
        ball, i.e. the normal of a facet containing ``x / ||x||``.
        """
        x = self._check(x)
        d = self.descriptor
        if isinstance(d, Lp):
            if d.p == 1:
                return np.where(x >= 0, 1.0, -1.0)
            if d.p == 2:
                n = np.linalg.norm(x)
                if n == 0:
                    e = np.zeros(self.dim)
                    e[0] = 1.0
                    return e
                return x / n
            i = int(np.argmax(np.abs(x)))
            f = np.zeros(self.dim)
            f[i] = 1.0 if x[i] >= 0 else -1.0
            return f
        if isinstance(d, Polytope):
            F = self._dual_vertices
            return F[int(np.argmax(F @ x))].copy()
        n = d.left.dim
        a, b = x[:n], x[n:]
        fa = d.left.supporting_functional(a)
        fb = d.right.supporting_functional(b)
        if d.kind == L1:
            return np.concatenate([fa, fb])
        if d.left._norm(a) >= d.right._norm(b):
            return np.concatenate([fa, np.zeros(d.right.dim)])
        return np.concatenate([np.zeros(n), fb])


def _sum_extremes(A: np.ndarray, B: np.ndarray, product: bool) -> np.ndarray:
    na, nb = A.shape[1], B.shape[1]
    if product:
        return np.array([np.concatenate([a, b]) for a in A for b in B])
    left = np.hstack([A, np.zeros((len(A), nb))])
    right = np.hstack([np.zeros((len(B), na)), B])
    return np.vstack([left, right])


def _generator_norm(V: np.ndarray, x: np.ndarray) -> float:
    # ||x|| = min sum |c_i| subject to sum c_i v_i = x, over one vertex per +/- pair
    half = []
    for v in V:
        if not any(np.max(np.abs(v + w)) <= 1e-9 for w in half):
            half.append(v)
    G = np.array(half).T
    k = G.shape[1]
    res = simplex.solve(np.ones(2 * k), A_eq=np.hstack([G, -G]), b_eq=x)
    return float(res.fun)


# ----------------------------------------------------------------------
# construction


def build_space(descriptor: Descriptor) -> Space:
    return Space(descriptor)


def lp(dim: int, p) -> Space:
    if p in ("inf", "∞"):
        p = math.inf
    return Space(Lp(int(dim), float(p)))


def polytope(vertices) -> Space:
    return Space(Polytope(tuple(tuple(float(c) for c in v) for v in vertices)))


def direct_sum(left: Space, right: Space, kind: str) -> Space:
    return Space(Sum(left, right, kind))


def regular_polygon(sides: int) -> Space:
    """Unit ball spanned by a regular ``sides``-gon (``sides`` even)."""
    if sides % 2 or sides < 4:
        raise SpaceError("a symmetric polygon needs an even number (>= 4) of sides")
    t = 2 * np.pi * np.arange(sides) / sides
    return polytope(np.column_stack([np.cos(t), np.sin(t)]))


_SCHEMA_KEYS = {
    "lp": {"type", "dim", "p"},
    "polytope": {"type", "vertices"},
    "sum": {"type", "kind", "left", "right"},
}


def space_from_dict(data, path: str = "$") -> Space:
    """Parse the structured space-definition schema.

    ``{"type": "lp", "dim": N, "p": "1" | "2" | "inf"}``,
    ``{"type": "polytope", "vertices": [[...], ...]}`` or
    ``{"type": "sum", "kind": "l1" | "linf", "left": ..., "right": ...}``.
    Unknown keys are rejected; error messages name the offending field.
    """
    if not isinstance(data, dict):
        raise SpaceError(f"{path}: expected an object")
    kind = data.get("type")
    if kind not in _SCHEMA_KEYS:
        raise SpaceError(f"{path}.type: expected one of {sorted(_SCHEMA_KEYS)}, got {kind!r}")
    extra = set(data) - _SCHEMA_KEYS[kind]
    if extra:
        raise SpaceError(f"{path}: unknown key(s) {sorted(extra)}")
    missing = _SCHEMA_KEYS[kind] - set(data)
    if missing:
        raise SpaceError(f"{path}: missing key(s) {sorted(missing)}")
    if kind == "lp":
        dim = data["dim"]
        if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
            raise SpaceError(f"{path}.dim: expected a positive integer")
        p = data["p"]
        if p not in ("1", "2", "inf"):
            raise SpaceError(f'{path}.p: expected "1", "2" or "inf", got {p!r}')
        return lp(dim, p)
    if kind == "polytope":
        verts = data["vertices"]
        if not isinstance(verts, list) or not verts:
            raise SpaceError(f"{path}.vertices: expected a non-empty list of vectors")
        for i, v in enumerate(verts):
            if not isinstance(v, list) or not all(
                isinstance(c, (int, float)) and not isinstance(c, bool) for c in v
            ):
                raise SpaceError(f"{path}.vertices[{i}]: expected a list of numbers")
        try:
            return polytope(verts)
        except SpaceError as exc:
            raise SpaceError(f"{path}.vertices: {exc}") from None
    if data["kind"] not in (L1, LINF):
        raise SpaceError(f'{path}.kind: expected "l1" or "linf", got {data["kind"]!r}')
    left = space_from_dict(data["left"], path + ".left")
    right = space_from_dict(data["right"], path + ".right")
    return direct_sum(left, right, data["kind"])


def space_to_dict(space: Space) -> dict:
    d = space.descriptor
    if isinstance(d, Lp):
        p = "inf" if d.p == math.inf else str(int(d.p))
        return {"type": "lp", "dim": d.dim, "p": p}
    if isinstance(d, Polytope):
        return {"type": "polytope", "vertices": [list(v) for v in d.vertices]}
    return {
        "type": "sum",
        "kind": d.kind,
        "left": space_to_dict(d.left),
        "right": space_to_dict(d.right),
    }


# ----------------------------------------------------------------------
# module-level operations


def norm(space: Space, x) -> float:
    return space.norm(x)


def dual_norm(space: Space, f) -> float:
    return space.dual_norm(f)


def ball_vertices(space: Space) -> np.ndarray:
    return space.ball_vertices()


def dual_ball_vertices(space: Space) -> np.ndarray:
    return space.dual_ball_vertices()


def sample_sphere(space: Space, count: int, seed: int) -> np.ndarray:
    """``count`` unit vectors from normalised isotropic Gaussian draws."""
    if count < 1:
        raise SpaceError("count must be at least 1")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((count, space.dim))
    return G / space.norms(G)[:, None]


def subspace_space(space: Space, basis) -> tuple[Space, np.ndarray]:
    """The subspace spanned by the columns of ``basis`` with the inherited norm.

    Returns ``(X, B)`` where ``X`` is a space on ``R^k`` and ``x = B @ y`` maps
    its coordinates into ``space``; ``||y||_X = ||B @ y||``.  Polyhedral
    spaces give a polytope (the section of the ball); Euclidean spaces give
    ``l2^k`` after orthonormalising the basis.
    """
    B = np.asarray(basis, dtype=float)
    if B.ndim != 2 or B.shape[0] != space.dim:
        raise SpaceError("basis must be a dim x k matrix")
    k = B.shape[1]
    if np.linalg.matrix_rank(B, tol=1e-9) < k:
        raise SpaceError("basis vectors are linearly dependent")
    if space.is_euclidean:
        Q, _ = np.linalg.qr(B)
        return lp(k, 2), Q
    space._require_polyhedral()
    A = space.dual_ball_vertices() @ B
    verts = polar_vertices(A)
    # snap the enumeration's round-off so the vertex set is exactly symmetric
    snapped = []
    for v in verts:
        if any(np.max(np.abs(v + w)) <= 1e-8 for w in snapped):
            continue
        snapped.append(v)
    sym = []
    for v in snapped:
        sym.extend([v, -v])
    return polytope(sym), B
