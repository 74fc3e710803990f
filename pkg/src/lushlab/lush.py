"""Lushness witnesses: verification, search, grid reports and almost-CL checks.

A witness for a pair ``u, v`` of unit vectors at level ``eps`` is a unit
functional ``f`` with ``u`` in the slice ``S(B, f, eps)``, together with points
``z_k`` of that slice and coefficients ``theta_k`` (``sum |theta_k| <= 1``)
whose combination is within ``eps`` of ``v``.

Grid reports are evidence, not proof: lushness quantifies over every pair
of unit vectors, and only finitely many pairs are ever tried.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .polytope import (
    TAU_SLICE,
    GeneratorSet,
    Slice,
    abs_conv_gauge,
    abs_conv_projection,
    caratheodory_prune,
    euclidean_cap_generators,
    slice_generators,
)
from .spaces import TAU_NORM, NotPolyhedralError, Space, sample_sphere

MAX_WITNESS_POINTS = 64


class Strategy(str, enum.Enum):
    DUAL_VERTICES = "dual_vertices"
    RANDOM = "random"
    BOTH = "both"


@dataclass(frozen=True, eq=False)
class LushWitness:
    functional: np.ndarray
    points: np.ndarray
    coefficients: np.ndarray
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "functional", np.asarray(self.functional, dtype=float))
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts.reshape(-1, self.functional.size))
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=float).ravel())
        if len(self.points) != len(self.coefficients):
            raise ValueError("witness needs one coefficient per point")

    def combination(self) -> np.ndarray:
        return self.coefficients @ self.points

    def negated(self) -> "LushWitness":
        """Witness for ``(-u, -v)`` obtained from one for ``(u, v)``."""
        return LushWitness(-self.functional, -self.points, self.coefficients.copy(), self.epsilon)

    def to_dict(self) -> dict:
        return {
            "functional": self.functional.tolist(),
            "points": self.points.tolist(),
            "coefficients": self.coefficients.tolist(),
            "epsilon": float(self.epsilon),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LushWitness":
        extra = set(data) - {"functional", "points", "coefficients", "epsilon"}
        if extra:
            raise ValueError(f"unknown witness key(s) {sorted(extra)}")
        return cls(data["functional"], data["points"], data["coefficients"], float(data["epsilon"]))


@dataclass(frozen=True)
class WitnessCheck:
    slice_margin_u: float
    hull_distance_v: float
    combination_distance: float
    valid: bool
    failures: tuple = ()

    def to_dict(self) -> dict:
        return {
            "slice_margin_u": self.slice_margin_u,
            "hull_distance_v": self.hull_distance_v,
            "combination_distance": self.combination_distance,
            "valid": self.valid,
            "failures": [dict(f) for f in self.failures],
        }


@dataclass(frozen=True, eq=False)
class SearchOutcome:
    """Result of :func:`find_lush_witness`.

    On failure ``witness`` is ``None`` and ``best_distance`` reports the
    smallest hull distance reached; it certifies nothing about the space.
    """

    success: bool
    witness: LushWitness | None
    best_distance: float
    trace: dict = field(default_factory=dict)


def _unit(space: Space, x, name: str) -> np.ndarray:
    x = space._check(x)
    if abs(space.norm(x) - 1.0) > TAU_NORM:
        raise ValueError(f"{name} must be a unit vector (norm {space.norm(x):.12g})")
    return x


def _generators(space: Space, slc: Slice, seed: int = 0) -> GeneratorSet:
    if space.is_polyhedral:
        return slice_generators(space, slc)
    return euclidean_cap_generators(space, slc, count=MAX_WITNESS_POINTS, seed=seed)


def verify_witness(space: Space, u, v, w: LushWitness) -> WitnessCheck:
    """Check both lushness conditions for ``w`` and report the margins."""
    u = _unit(space, u, "u")
    v = _unit(space, v, "v")
    f = space._check(w.functional)
    eps = float(w.epsilon)
    failures = []
    fn = space.dual_norm(f)
    if abs(fn - 1.0) > TAU_NORM:
        failures.append({"invariant": "functional_unit_norm", "amount": fn - 1.0})
    total = float(np.abs(w.coefficients).sum())
    if total > 1 + TAU_SLICE:
        failures.append({"invariant": "coefficient_l1_bound", "amount": total - 1.0})
    for k, z in enumerate(w.points):
        nz = space.norm(z)
        if nz > 1 + TAU_NORM:
            failures.append({"invariant": "point_in_ball", "index": k, "amount": nz - 1.0})
        depth = float(f @ z) - (1.0 - eps)
        if depth < -TAU_SLICE:
            failures.append({"invariant": "point_in_slice", "index": k, "amount": -depth})
    margin = float(f @ u) - (1.0 - eps)
    if len(w.points):
        hull = abs_conv_projection(space, v, GeneratorSet(w.points)).distance
    else:
        hull = space.norm(v)
    combo = space.norm(w.combination() - v) if len(w.points) else space.norm(v)
    valid = not failures and margin > -TAU_SLICE and hull < eps + TAU_SLICE
    return WitnessCheck(margin, float(hull), float(combo), valid, tuple(failures))


def _candidate(space: Space, f: np.ndarray, v: np.ndarray, eps: float, seed: int):
    """Best witness for the slice of ``f``: ``(distance, points, theta)``."""
    level = 1.0 - eps
    if float(f @ v) >= level:
        return 0.0, v[None].copy(), np.array([1.0])
    if float(-f @ v) >= level:
        return 0.0, -v[None], np.array([-1.0])
    gens = _generators(space, Slice(f, eps), seed)
    res = abs_conv_projection(space, v, gens)
    return res.distance, gens.points, res.coefficients


def _digest(trace: dict) -> str:
    blob = json.dumps(trace, sort_keys=True, default=float).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def find_lush_witness(
    space: Space,
    u,
    v,
    eps: float,
    strategy: Strategy | str = Strategy.BOTH,
    budget: int = 256,
    seed: int = 0,
) -> SearchOutcome:
    """Search for a functional whose ``eps``-slice certifies the pair ``(u, v)``.

    ``DUAL_VERTICES`` walks the extreme dual functionals whose slice contains
    ``u`` (polyhedral spaces only) and solves the distance LP for each;
    ``RANDOM`` draws ``budget`` seeded perturbations of a supporting
    functional of ``u``; ``BOTH`` runs the first and falls back to the second.
    Slices containing ``v`` or ``-v`` are used directly.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    strategy = Strategy(strategy)
    u = _unit(space, u, "u")
    v = _unit(space, v, "v")
    level = 1.0 - eps
    best = (np.inf, None, None, None)
    tried = 0

    def consider(f, seed_k):
        nonlocal best, tried
        tried += 1
        dist, pts, theta = _candidate(space, f, v, eps, seed_k)
        if dist < best[0]:
            best = (dist, f, pts, theta)
        return dist

    if strategy in (Strategy.DUAL_VERTICES, Strategy.BOTH):
        if space.is_polyhedral:
            F = space.dual_ball_vertices()
            admissible = [f for f in F if float(f @ u) > level - TAU_SLICE]
            # cheapest certificates first: slices that already hold v, then -v
            ordered = (
                [f for f in admissible if float(f @ v) >= level]
                + [f for f in admissible if float(-f @ v) >= level]
                + admissible
            )
            for f in ordered:
                if consider(f, seed) <= 0.0:
                    break
        elif strategy is Strategy.DUAL_VERTICES:
            raise NotPolyhedralError(f"{space.label} has no dual vertices")

    if strategy is Strategy.RANDOM or (strategy is Strategy.BOTH and not best[0] < eps):
        f0 = space.supporting_functional(u)
        for k in range(budget):
            rng = np.random.default_rng([seed, k])
            if k == 0:
                f = f0
            else:
                sigma = 2.0 * np.sqrt(eps) * rng.random()
                f = f0 + sigma * rng.standard_normal(space.dim)
                f = f / space.dual_norm(f)
            if float(f @ u) <= level:
                continue
            if consider(f, k) < eps:
                break

    dist, f, pts, theta = best
    trace = {
        "strategy": strategy.value,
        "budget": budget,
        "seed": seed,
        "functionals_tried": tried,
        "best_distance": None if f is None else float(dist),
        "best_functional": None if f is None else [float(c) for c in f],
    }
    trace["digest"] = _digest(trace)
    if f is None or not dist < eps:
        return SearchOutcome(False, None, float(dist), trace)
    keep = np.abs(theta) > 1e-12
    pts, theta = pts[keep], theta[keep]
    if len(theta) > space.dim + 1 or len(theta) > MAX_WITNESS_POINTS:
        pts, theta = caratheodory_prune(pts, theta)
    witness = LushWitness(np.array(f, dtype=float), pts, theta, eps)
    check = verify_witness(space, u, v, witness)
    if not check.valid:
        trace["verification"] = check.to_dict()
        return SearchOutcome(False, None, float(dist), trace)
    return SearchOutcome(True, witness, float(dist), trace)


def thread_count() -> int:
    """Worker cap from ``LUSHLAB_THREADS``; unset means a single thread."""
    raw = os.environ.get("LUSHLAB_THREADS")
    if raw is None or raw == "":
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"LUSHLAB_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"LUSHLAB_THREADS must be a positive integer, got {raw!r}")
    return n


def grid_pairs(space: Space, grid_size: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """All ordered ball-vertex pairs (polyhedral spaces) then ``grid_size`` random pairs."""
    pairs = []
    if space.is_polyhedral:
        V = space.ball_vertices()
        pairs.extend((a.copy(), b.copy()) for a in V for b in V)
    if grid_size > 0:
        S = sample_sphere(space, 2 * grid_size, seed)
        pairs.extend(zip(S[:grid_size], S[grid_size:]))
    return pairs


def lushness_grid_report(
    space: Space,
    eps_list,
    grid_size: int,
    seed: int,
    strategy: Strategy | str = Strategy.BOTH,
    budget: int = 64,
    threads: int | None = None,
) -> dict:
    """Run :func:`find_lush_witness` over a deterministic grid of pairs.

    A space is reported ``lush_at_grid_scale`` for an ``eps`` only if every
    pair passes.  Cells are independent; with ``threads > 1`` they run on a
    thread pool and are collected in grid order.
    """
    if grid_size < 0:
        raise ValueError("grid_size must be non-negative")
    pairs = grid_pairs(space, grid_size, seed)
    threads = thread_count() if threads is None else threads
    per_eps = []
    for eps in eps_list:
        def cell(args):
            idx, (u, v) = args
            out = find_lush_witness(space, u, v, eps, strategy, budget, seed * 1_000_003 + idx)
            return out.success, out.best_distance
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(cell, enumerate(pairs)))
        else:
            results = [cell(item) for item in enumerate(pairs)]
        passed = sum(ok for ok, _ in results)
        worst = max(range(len(results)), key=lambda i: (not results[i][0], results[i][1]))
        per_eps.append(
            {
                "eps": float(eps),
                "pairs": len(pairs),
                "passed": int(passed),
                "pass_fraction": passed / len(pairs),
                "lush_at_grid_scale": passed == len(pairs),
                "worst_pair": {
                    "index": int(worst),
                    "u": pairs[worst][0].tolist(),
                    "v": pairs[worst][1].tolist(),
                    "success": bool(results[worst][0]),
                    "best_distance": float(results[worst][1]),
                },
            }
        )
    return {
        "space": space.label,
        "grid_size": int(grid_size),
        "vertex_pairs": len(pairs) - int(grid_size),
        "strategy": Strategy(strategy).value,
        "budget": int(budget),
        "results": per_eps,
        "lush_at_grid_scale": all(r["lush_at_grid_scale"] for r in per_eps),
    }


@dataclass(frozen=True, eq=False)
class AlmostCLResult:
    holds: bool
    certificate: dict

    def __iter__(self):
        yield self.holds
        yield self.certificate


def almost_cl_check(space: Space) -> AlmostCLResult:
    """Check ``co(+-F) = B`` for every facet ``F`` of a polytope ball.

    The maximal convex subsets of the sphere of a polyhedral space are its
    facets, and ``co(+-F)`` is closed, so it suffices that every ball vertex
    lies in ``co(+-F)``; membership is decided by the gauge LP.  On failure
    the certificate names the first offending facet and vertex.
    """
    if not space.is_polyhedral:
        raise NotPolyhedralError(f"{space.label} is not polyhedral")
    V = space.ball_vertices()
    F = space.dual_ball_vertices()
    vals = V @ F.T
    checks = 0
    for j, f in enumerate(F):
        facet = V[np.abs(vals[:, j] - 1.0) <= TAU_NORM]
        gens = GeneratorSet(facet)
        for x in V:
            if any(np.max(np.abs(x - s * p)) <= 1e-12 for p in facet for s in (1.0, -1.0)):
                continue
            checks += 1
            gauge, _ = abs_conv_gauge(x, gens)
            if gauge > 1.0 + TAU_NORM:
                return AlmostCLResult(
                    False,
                    {
                        "facet_index": j,
                        "facet_functional": f.tolist(),
                        "facet_vertices": facet.tolist(),
                        "vertex": x.tolist(),
                        "gauge": gauge,
                    },
                )
    return AlmostCLResult(True, {"facets": len(F), "vertices": len(V), "membership_lps": checks})
