"""L- and M-projections, annihilators and M-ideal detection.

A projection ``P`` is an M-projection when ``||z|| = max(||Pz||, ||z - Pz||)``
for all ``z`` and an L-projection when ``||z|| = ||Pz|| + ||z - Pz||``.  Both
identities are tested on probe vectors; agreement on finitely many probes
is evidence, so reports record which probes were used.

In finite dimensions every M-ideal is an M-summand, and a subspace ``X`` is
an M-ideal exactly when ``X^perp`` is the range of an L-projection on the
dual.  :func:`is_m_ideal` searches for such a projection.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .spaces import L1, Space, SpaceError, Sum, sample_sphere

TAU_PROJ = 1e-9
NEWTON_REPAIR_LIMIT = 1e-6


class Kind(str, enum.Enum):
    L = "L"
    M = "M"
    NEITHER = "NEITHER"
    ZERO_OR_IDENTITY = "ZERO_OR_IDENTITY"


class Side(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True, eq=False)
class Projection:
    matrix: np.ndarray
    classification: Kind
    counterexample: np.ndarray | None = None
    report: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class Subspace:
    """Span of the rows of ``basis`` (in reduced row echelon form)."""

    basis: np.ndarray
    dim: int

    @property
    def rank(self) -> int:
        return len(self.basis)

    @property
    def is_zero(self) -> bool:
        return self.rank == 0

    @property
    def columns(self) -> np.ndarray:
        return self.basis.T.copy()

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        if self.is_zero:
            return bool(np.abs(x).max() <= tol)
        coef, *_ = np.linalg.lstsq(self.basis.T, x, rcond=None)
        return bool(np.abs(self.basis.T @ coef - x).max() <= tol)

    def same_as(self, other: "Subspace", tol: float = 1e-9) -> bool:
        return self.rank == other.rank and all(other.contains(b, tol) for b in self.basis)


def rref(A, tol: float = 1e-10) -> np.ndarray:
    """Reduced row echelon form with zero rows removed."""
    A = np.array(A, dtype=float, copy=True)
    rows, cols = A.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = r + int(np.argmax(np.abs(A[r:, c])))
        if abs(A[p, c]) <= tol:
            continue
        A[[r, p]] = A[[p, r]]
        A[r] /= A[r, c]
        for i in range(rows):
            if i != r:
                A[i] -= A[i, c] * A[r]
        r += 1
    A = A[:r]
    A[np.abs(A) <= tol] = 0.0
    return A


def span(vectors, dim: int | None = None) -> Subspace:
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    if dim is None:
        dim = V.shape[1]
    if V.size == 0:
        return Subspace(np.zeros((0, dim)), dim)
    return Subspace(rref(V), V.shape[1])


def as_projection_matrix(P) -> np.ndarray:
    """Return ``P`` if idempotent, after one Newton step if the drift is small."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise SpaceError("projection must be a square matrix")
    drift = np.abs(P @ P - P).max()
    if drift <= TAU_PROJ:
        return P
    if drift <= NEWTON_REPAIR_LIMIT:
        P2 = P @ P
        P = 3 * P2 - 2 * P2 @ P
        if np.abs(P @ P - P).max() <= TAU_PROJ:
            return P
    raise ValueError(f"matrix is not idempotent (max |P^2 - P| = {drift:.3g})")


def _probes(space: Space, trials: int, seed: int) -> tuple[np.ndarray, int, int]:
    n = space.dim
    blocks = []
    n_vertices = 0
    if space.is_polyhedral:
        V = space.ball_vertices()
        blocks.append(V)
        n_vertices = len(V)
    eye = np.eye(n)
    basis = [eye[i] for i in range(n)]
    for i, j in itertools.combinations(range(n), 2):
        basis.extend([eye[i] + eye[j], eye[i] - eye[j]])
    blocks.append(np.array(basis))
    if trials > 0:
        blocks.append(sample_sphere(space, trials, seed))
    return np.vstack(blocks), n_vertices, len(basis)


def _defects(space: Space, P: np.ndarray, Z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    nz = space.norms(Z)
    a = space.norms(Z @ P.T)
    b = space.norms(Z - Z @ P.T)
    scale = np.maximum(nz, 1.0)
    return nz, np.abs(nz - (a + b)) / scale, np.abs(nz - np.maximum(a, b)) / scale


def classify_projection(space: Space, P, trials: int = 256, seed: int = 0) -> Projection:
    """Classify an idempotent matrix as an L-, M- or neither projection.

    Probes are the ball vertices (polyhedral spaces), the vectors ``e_i`` and
    ``e_i +- e_j``, and ``trials`` seeded sphere samples.
    """
    P = as_projection_matrix(P)
    if P.shape[0] != space.dim:
        raise SpaceError(f"projection must be {space.dim}x{space.dim}")
    report = {"vertex_agreement_alone_not_conclusive": True}
    if np.abs(P).max() <= TAU_PROJ or np.abs(P - np.eye(space.dim)).max() <= TAU_PROJ:
        return Projection(P, Kind.ZERO_OR_IDENTITY, None, report)
    Z, n_vertices, n_basis = _probes(space, trials, seed)
    _, dl, dm = _defects(space, P, Z)
    report.update(
        {
            "probes": len(Z),
            "vertex_probes": n_vertices,
            "basis_probes": n_basis,
            "sample_probes": int(trials),
            "max_l_defect": float(dl.max()),
            "max_m_defect": float(dm.max()),
        }
    )
    if dl.max() <= TAU_PROJ:
        return Projection(P, Kind.L, None, report)
    if dm.max() <= TAU_PROJ:
        return Projection(P, Kind.M, None, report)
    both = np.flatnonzero((dl > TAU_PROJ) & (dm > TAU_PROJ))
    idx = int(both[0]) if both.size else int(np.argmax(np.maximum(dl, dm)))
    report["counterexample_l"] = Z[int(np.argmax(dl > TAU_PROJ))].tolist()
    report["counterexample_m"] = Z[int(np.argmax(dm > TAU_PROJ))].tolist()
    return Projection(P, Kind.NEITHER, Z[idx].copy(), report)


def complement(space: Space, proj: Projection, trials: int = 256, seed: int = 0) -> Projection:
    return classify_projection(space, np.eye(space.dim) - proj.matrix, trials, seed)


def coordinate_projection(space: Space, side: Side | str, trials: int = 256, seed: int = 0) -> Projection:
    """Block projection of a direct sum onto one summand (re-verified)."""
    d = space.descriptor
    if not isinstance(d, Sum):
        raise SpaceError(f"{space.label} is not a direct sum")
    side = Side(side)
    mask = np.zeros(space.dim)
    if side is Side.LEFT:
        mask[: d.left.dim] = 1.0
    else:
        mask[d.left.dim :] = 1.0
    proj = classify_projection(space, np.diag(mask), trials, seed)
    expected = Kind.L if d.kind == L1 else Kind.M
    proj.report["expected"] = expected.value
    return proj


def annihilator(space: Space, X: Subspace) -> Subspace:
    """``{f : f(x) = 0 for x in X}`` as a subspace of the dual coordinates.

    A full-dimensional ``X`` gives the zero subspace (empty basis).
    """
    if X.dim != space.dim:
        raise SpaceError("subspace lives in a different dimension")
    if X.is_zero:
        return Subspace(np.eye(space.dim), space.dim)
    _, s, vt = np.linalg.svd(X.basis)
    rank = int((s > 1e-10 * s.max()).sum())
    null = vt[rank:]
    if len(null) == 0:
        return Subspace(np.zeros((0, space.dim)), space.dim)
    return span(null, space.dim)


def projection_onto_along(range_basis: np.ndarray, kernel_cols: np.ndarray, dim: int) -> np.ndarray:
    """Projection with range ``{f : range_basis @ f = 0}`` and kernel ``span(kernel_cols)``.

    ``range_basis`` holds the rows of a basis of ``X``; the range is ``X^perp``.
    """
    G = range_basis @ kernel_cols
    return np.eye(dim) - kernel_cols @ np.linalg.solve(G, range_basis)


@dataclass(frozen=True, eq=False)
class MIdealResult:
    holds: bool
    report: dict
    dual_l_projection: Projection | None = None
    m_projection: Projection | None = None

    def __iter__(self):
        yield self.holds
        yield self.report


def is_m_ideal(space: Space, X: Subspace, trials: int = 64, seed: int = 0) -> MIdealResult:
    """Decide whether ``X`` is an M-ideal by finding an L-projection onto ``X^perp``.

    Candidate kernels are (a) coordinate subspaces, which cover the canonical
    structure of direct sums, and (b) ``trials`` seeded random complements,
    the most promising of which are refined by Nelder-Mead on the L-defect.
    ``True`` is certified by a verified dual L-projection; ``False`` only means
    no L-complement was found.
    """
    n, k = space.dim, X.rank
    if not 0 < k < n:
        raise SpaceError("M-ideal test needs 0 < rank(X) < dim")
    dual = space.dual()
    perp = annihilator(space, X)
    Xb = X.basis
    report = {
        "dual_space": dual.label,
        "annihilator": perp.basis.tolist(),
        "reflexive_note": "finite dimensions: X^perp-perp = X, so every M-ideal is an M-summand",
    }
    probes, _, _ = _probes(dual, 64, seed)

    def defect(W):
        G = Xb @ W
        if abs(np.linalg.det(G)) < 1e-8:
            return np.inf
        Q = projection_onto_along(Xb, W, n)
        _, dl, _ = _defects(dual, Q, probes)
        return float(dl.max())

    def certify(source, W, tried):
        Q = projection_onto_along(Xb, W, n)
        proj = classify_projection(dual, Q, trials=256, seed=seed)
        if proj.classification is not Kind.L:
            return None
        P = classify_projection(space, (np.eye(n) - Q).T, trials=256, seed=seed)
        report.update(
            {
                "candidates_tried": tried,
                "source": source,
                "dual_l_projection": Q.tolist(),
                "m_projection": P.matrix.tolist(),
                "m_projection_classification": P.classification.value,
            }
        )
        return MIdealResult(P.classification is Kind.M, report, proj, P)

    tried = 0
    for S in itertools.combinations(range(n), k):
        W = np.eye(n)[:, list(S)]
        if abs(np.linalg.det(Xb @ W)) < 1e-8:
            continue
        tried += 1
        found = certify("coordinate", W, tried)
        if found is not None:
            return found
    rng = np.random.default_rng(seed)
    randoms = []
    for _ in range(trials):
        W = rng.standard_normal((n, k))
        d = defect(W)
        tried += 1
        if np.isfinite(d):
            randoms.append((d, W))
    randoms.sort(key=lambda t: t[0])
    for d0, W0 in randoms[:4]:
        res = minimize(lambda w: defect(w.reshape(n, k)), W0.ravel(), method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
        found = certify("random-refined", res.x.reshape(n, k), tried)
        if found is not None:
            return found
    report.update({"candidates_tried": tried, "conclusion": "no L-complement found"})
    return MIdealResult(False, report)
