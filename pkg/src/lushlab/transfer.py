"""Lushness witnesses pushed from a space ``Z`` down to a subspace ``X``.

Three constructions are provided: ``X`` an M-summand, an L-summand, or an
M-ideal of ``Z``.  Each one starts from a witness for a pair ``u, v`` of unit
vectors of ``X`` in ``Z``, builds points of ``X`` from it, records every
inequality the construction relies on as a named :class:`Step`, and finally
re-verifies the resulting witness inside ``X`` (``ran P`` or the M-ideal,
with the inherited norm).

Real scalars only: the unimodular scalars are ``{-1, +1}`` and imaginary
parts vanish, so the bound on ``(Im z*(y_k))^2`` is checked in its
degenerate form ``0 <= 2 ||y_k|| eta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lmstruct import Kind, Subspace, classify_projection, is_m_ideal, span
from .lush import LushWitness, Strategy, WitnessCheck, find_lush_witness, verify_witness
from .polytope import TAU_SLICE
from .spaces import TAU_NORM, Space, subspace_space

Y_K_NOTE = "y_k is the complementary part z_k - P z_k"


class TransferError(ValueError):
    """A precondition of a transfer failed (bad projection, witness or scale)."""


@dataclass(frozen=True)
class Step:
    name: str
    lhs: float
    rhs: float
    relation: str
    passed: bool
    margin: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "relation": self.relation,
            "pass": self.passed,
            "margin": self.margin,
        }


def _le(name: str, lhs: float, rhs: float, strict: bool = False) -> Step:
    margin = float(rhs) - float(lhs)
    return Step(name, float(lhs), float(rhs), "<" if strict else "<=", margin > -TAU_SLICE, margin)


def _eq(name: str, lhs: float, rhs: float) -> Step:
    gap = abs(float(lhs) - float(rhs))
    return Step(name, float(lhs), float(rhs), "==", gap <= TAU_NORM * max(1.0, abs(lhs)), -gap)


def _exact_lt(name: str, lhs: float, rhs: float) -> Step:
    # arithmetic constraints on eta are checked without slack
    return Step(name, float(lhs), float(rhs), "<", lhs < rhs, float(rhs) - float(lhs))


@dataclass(eq=False)
class TransferReport:
    construction: str
    epsilon: float
    target_epsilon: float
    steps: list[Step] = field(default_factory=list)
    output_witness: LushWitness | None = None
    output_check: WitnessCheck | None = None
    eta_used: float | None = None
    subspace_basis: np.ndarray | None = None
    ambient_points: np.ndarray | None = None
    notes: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.steps) and bool(self.output_check and self.output_check.valid)

    def failed_steps(self) -> list[Step]:
        return [s for s in self.steps if not s.passed]

    def to_dict(self) -> dict:
        return {
            "construction": self.construction,
            "epsilon": self.epsilon,
            "target_epsilon": self.target_epsilon,
            "eta_used": self.eta_used,
            "steps": [s.to_dict() for s in self.steps],
            "output_witness": None if self.output_witness is None else self.output_witness.to_dict(),
            "output_check": None if self.output_check is None else self.output_check.to_dict(),
            "subspace_basis": None if self.subspace_basis is None else self.subspace_basis.T.tolist(),
            "ambient_points": None if self.ambient_points is None else self.ambient_points.tolist(),
            "notes": list(self.notes),
            "passed": self.passed,
            **self.extra,
        }


def eta_for_eps(eps: float) -> float:
    """``eta = min(eps^2/16, eps/6)``, so ``3 eta + 2 sqrt(eta) < eps`` and ``2 eta < eps``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    return min(eps * eps / 16.0, eps / 6.0)


def eta_steps(eps: float, eta: float) -> list[Step]:
    return [
        _exact_lt("eta_constraint_3eta_2sqrt", 3 * eta + 2 * math.sqrt(eta), eps),
        _exact_lt("eta_constraint_2eta", 2 * eta, eps),
    ]


# ----------------------------------------------------------------------
# shared helpers


def _in_range(P: np.ndarray, x: np.ndarray) -> bool:
    return float(np.abs(P @ x - x).max()) <= 1e-9


def _restrict(Z: Space, basis_cols: np.ndarray, zstar: np.ndarray, u, v, points, theta, target: float):
    """Move a witness living in ``span(basis_cols)`` into subspace coordinates and verify it.

    The functional is restricted to the subspace and renormalised there.
    """
    X, B = subspace_space(Z, basis_cols)

    def coords(x):
        y, *_ = np.linalg.lstsq(B, np.asarray(x, dtype=float), rcond=None)
        return y

    f = B.T @ zstar
    fnorm = X.dual_norm(f)
    witness = LushWitness(f / fnorm, np.array([coords(p) for p in points]), np.asarray(theta), target)
    check = verify_witness(X, coords(u), coords(v), witness)
    return X, B, fnorm, witness, check


def _restriction_steps(fnorm: float, zu: float, level: float) -> list[Step]:
    return [
        _le("restricted_functional_norm_at_most_1", fnorm, 1.0),
        _le("restricted_functional_norm_below_u_value", level, zu, strict=True),
    ]


def _output_steps(check: WitnessCheck, target: float) -> list[Step]:
    return [
        Step("output_u_in_slice", 0.0, check.slice_margin_u, ">", check.slice_margin_u > -TAU_SLICE,
             check.slice_margin_u),
        _le("output_hull_distance", check.hull_distance_v, target, strict=True),
        Step("output_witness_valid", float(check.valid), 1.0, "==", check.valid, 0.0 if check.valid else -1.0),
    ]


def _input_witness(Z, u, v, eps, witness, budget, seed, what) -> LushWitness:
    if witness is None:
        out = find_lush_witness(Z, u, v, eps, Strategy.BOTH, budget, seed)
        if not out.success:
            raise TransferError(
                f"no lushness witness found in Z at {what}={eps:.6g} "
                f"(best distance {out.best_distance:.6g})"
            )
        return out.witness
    witness = LushWitness(witness.functional, witness.points, witness.coefficients, eps)
    check = verify_witness(Z, u, v, witness)
    if not check.valid:
        raise TransferError(f"input witness is not valid at {what}={eps:.6g}: {check.to_dict()}")
    return witness


def _unit_in(Z: Space, P: np.ndarray, x, name: str) -> np.ndarray:
    x = Z._check(x)
    if abs(Z.norm(x) - 1.0) > TAU_NORM:
        raise TransferError(f"{name} must be a unit vector")
    if not _in_range(P, x):
        raise TransferError(f"{name} must lie in the subspace")
    return x


def _range_basis(P: np.ndarray) -> np.ndarray:
    return span(P.T).basis.T


# ----------------------------------------------------------------------
# M-summands


def transfer_m_summand(
    Z: Space, P, u, v, w: LushWitness, eps: float, trials: int = 256, seed: int = 0
) -> TransferReport:
    """Witness for ``ran P`` at ``eps`` from a ``Z``-witness at ``eps/2``.

    ``P`` must be an M-projection.  With ``x_k = P z_k`` and
    ``y_k = z_k - P z_k`` the same functional and coefficients work for the
    points ``x_k``.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    proj = classify_projection(Z, P, trials, seed)
    if proj.classification is not Kind.M:
        raise TransferError(f"P is not an M-projection ({proj.classification.value})")
    P = proj.matrix
    u = _unit_in(Z, P, u, "u")
    v = _unit_in(Z, P, v, "v")
    if abs(w.epsilon - eps / 2) > 1e-12:
        raise TransferError(f"input witness must be taken at eps/2 = {eps / 2}")
    check = verify_witness(Z, u, v, w)
    if not check.valid:
        raise TransferError(f"input witness is not valid at eps/2: {check.to_dict()}")

    half = eps / 2
    zs, theta, Zs = w.functional, w.coefficients, w.points
    X_pts = Zs @ P.T
    Y_pts = Zs - X_pts
    rep = TransferReport("m-summand", eps, eps, notes=[Y_K_NOTE])
    s = rep.steps
    d_z = Z.norm(theta @ Zs - v)
    d_x = Z.norm(theta @ X_pts - v)
    d_y = Z.norm(theta @ Y_pts)
    s.append(_le("input_combination_distance", d_z, half, strict=True))
    s.append(_eq("m_decomposition_identity", d_z, max(d_y, d_x)))
    s.append(_le("u_in_half_slice", 1 - half, float(zs @ u), strict=True))
    for k in range(len(theta)):
        s.append(_le(f"z_k_in_half_slice[{k}]", 1 - half, float(zs @ Zs[k])))
        s.append(_le(f"y_k_functional_bound[{k}]", float(zs @ Y_pts[k]), half))
        s.append(_le(f"x_k_in_slice[{k}]", 1 - eps, float(zs @ X_pts[k]), strict=True))
    s.append(_le("x_combination_distance", d_x, eps, strict=True))

    B = _range_basis(P)
    X, B, fnorm, out, ocheck = _restrict(Z, B, zs, u, v, X_pts, theta, eps)
    s.extend(_restriction_steps(fnorm, float(zs @ u), 1 - half))
    s.extend(_output_steps(ocheck, eps))
    rep.output_witness, rep.output_check = out, ocheck
    rep.subspace_basis, rep.ambient_points = B, X_pts
    return rep


# ----------------------------------------------------------------------
# L-summands


def transfer_l_summand(
    Z: Space,
    P,
    u,
    v,
    eps: float,
    witness: LushWitness | None = None,
    budget: int = 256,
    seed: int = 0,
    trials: int = 256,
) -> TransferReport:
    """Witness for ``ran P`` at ``eps`` when ``P`` is an L-projection.

    A ``Z``-witness is taken at ``eta = eta_for_eps(eps)`` (searched for unless
    supplied).  The complementary parts ``y_k`` are replaced by
    ``xi_k = ||y_k|| u``, giving points ``x_k + xi_k`` of ``ran P``.
    """
    eta = eta_for_eps(eps)
    proj = classify_projection(Z, P, trials, seed)
    if proj.classification is not Kind.L:
        raise TransferError(f"P is not an L-projection ({proj.classification.value})")
    P = proj.matrix
    u = _unit_in(Z, P, u, "u")
    v = _unit_in(Z, P, v, "v")
    w = _input_witness(Z, u, v, eta, witness, budget, seed, "eta")

    zs, theta, Zs = w.functional, w.coefficients, w.points
    X_pts = Zs @ P.T
    Y_pts = Zs - X_pts
    ny = Z.norms(Y_pts)
    xi = ny[:, None] * u[None, :]
    Xt = X_pts + xi
    rep = TransferReport("l-summand", eps, eps, eta_used=eta, notes=["xi_k = ||y_k|| u with ||u|| = 1"])
    s = rep.steps
    s.extend(eta_steps(eps, eta))

    d_z = Z.norm(theta @ Zs - v)
    d_x = Z.norm(theta @ X_pts - v)
    d_y = Z.norm(theta @ Y_pts)
    s.append(_le("input_combination_distance", d_z, eta, strict=True))
    s.append(_eq("l_decomposition_identity", d_z, d_x + d_y))
    s.append(_le("x_part_distance", d_x, eta, strict=True))
    s.append(_le("y_part_norm", d_y, eta, strict=True))

    zy = Zs @ zs - X_pts @ zs  # z*(y_k)
    deltas = ny - zy
    for k in range(len(theta)):
        nz = Z.norm(Zs[k])
        s.append(_le(f"tilde_x_norm[{k}]", Z.norm(Xt[k]), nz))
        s.append(_le(f"z_k_in_ball[{k}]", nz, 1.0))
        s.append(_le(f"tilde_x_slice_2eta[{k}]", 1 - 2 * eta, float(zs @ Xt[k]), strict=True))
        s.append(_le(f"ineq_1_real_attainment[{k}]", ny[k] - eta, zy[k]))
        s.append(_le(f"ineq_2_imag_degenerate[{k}]", 0.0, 2 * ny[k] * eta))
        margin = min(deltas[k], eta - deltas[k])
        s.append(Step(f"delta_k_range[{k}]", float(deltas[k]), eta, "in [0, eta]", margin > -TAU_SLICE, margin))

    lhs = abs(float(theta @ zy))
    inter = eta + (math.sqrt(2 * eta * float(ny.max())) if len(ny) else 0.0)
    final = eta + 2 * math.sqrt(eta)
    s.append(_le("sum_real_functional_intermediate", lhs, inter))
    s.append(_le("sum_real_functional_bound", lhs, final))
    s.append(_le("xi_sum_bound", Z.norm(theta @ xi), 2 * eta + 2 * math.sqrt(eta)))
    d_t = Z.norm(theta @ Xt - v)
    s.append(_le("final_distance_bound", d_t, 3 * eta + 2 * math.sqrt(eta)))
    s.append(_le("final_distance_lt_eps", d_t, eps, strict=True))
    for k in range(len(theta)):
        s.append(_le(f"tilde_x_slice_eps[{k}]", 1 - eps, float(zs @ Xt[k]), strict=True))
    rep.extra["sum_real_bound_tight"] = "intermediate" if inter < final else "final"
    rep.extra["input_witness"] = w.to_dict()

    B = _range_basis(P)
    X, B, fnorm, out, ocheck = _restrict(Z, B, zs, u, v, Xt, theta, eps)
    s.extend(_restriction_steps(fnorm, float(zs @ u), 1 - eta))
    s.extend(_output_steps(ocheck, eps))
    rep.output_witness, rep.output_check = out, ocheck
    rep.subspace_basis, rep.ambient_points = B, Xt
    return rep


# ----------------------------------------------------------------------
# M-ideals


def _unit_vectors_of(Z: Space, E: np.ndarray, seed: int, count: int = 64) -> np.ndarray:
    """Unit vectors of ``span(E)``: normalised basis vectors plus random combinations."""
    rng = np.random.default_rng(seed)
    C = np.vstack([np.eye(E.shape[1]), rng.standard_normal((count, E.shape[1]))])
    pts = C @ E.T
    norms = Z.norms(pts)
    return pts[norms > 0] / norms[norms > 0, None]


def transfer_m_ideal(
    Z: Space,
    X: Subspace,
    u,
    v,
    eps: float,
    iso_scale: float = 1.0,
    witness: LushWitness | None = None,
    budget: int = 256,
    seed: int = 0,
    trials: int = 64,
) -> TransferReport:
    """Witness for an M-ideal ``X`` at ``2 eps`` from a ``Z``-witness at ``eps/2``.

    In finite dimensions the bidual is ``Z`` itself and ``X^perp-perp = X``, so
    the bidual decomposition is the M-summand decomposition found by
    :func:`is_m_ideal`.  The local-reflexivity operator is simulated by the
    scalar map ``T = iso_scale * id`` on ``E = span{x_k**, v}``, which meets the
    ``1 +- eps/2`` distortion band whenever ``|iso_scale - 1| <= eps/2``.  A
    scalar ``T`` fixes points and matches functionals only up to that scale
    deviation, which is recorded as separate steps.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    half = eps / 2
    if abs(iso_scale - 1.0) > half + 1e-12:
        raise TransferError(f"iso_scale {iso_scale} outside the band [1 - eps/2, 1 + eps/2]")
    mi = is_m_ideal(Z, X, trials=trials, seed=seed)
    if not mi.holds:
        raise TransferError("X is not detected as an M-ideal of Z")
    P = mi.m_projection.matrix
    u = _unit_in(Z, P, u, "u")
    v = _unit_in(Z, P, v, "v")
    w = _input_witness(Z, u, v, half, witness, budget, seed, "eps/2")

    zs, theta, Zs = w.functional, w.coefficients, w.points
    Xb = Zs @ P.T  # x_k** in X^perp-perp = X
    Yb = Zs - Xb  # y_k** in the complementary M-summand
    rep = TransferReport(
        "m-ideal",
        eps,
        2 * eps,
        notes=[
            Y_K_NOTE,
            "bidual identified with Z (finite dimensions, isometric canonical embedding)",
            f"local reflexivity simulated by T = {iso_scale!r} * identity on E",
        ],
        extra={"iso_scale": float(iso_scale), "m_ideal_report": mi.report},
    )
    s = rep.steps
    d_z = Z.norm(theta @ Zs - v)
    d_x = Z.norm(theta @ Xb - v)
    d_y = Z.norm(theta @ Yb)
    s.append(_le("input_combination_distance", d_z, half, strict=True))
    s.append(_eq("m_decomposition_identity", d_z, max(d_y, d_x)))
    s.append(_le("u_in_half_slice", 1 - half, float(zs @ u), strict=True))
    for k in range(len(theta)):
        s.append(_le(f"y_functional_bound[{k}]", abs(float(zs @ Yb[k])), half * Z.norm(Yb[k])))
        s.append(_le(f"x_bidual_slice[{k}]", 1 - eps, float(zs @ Xb[k]), strict=True))
        s.append(_le(f"x_bidual_norm_lower[{k}]", 1 - eps, Z.norm(Xb[k])))
        s.append(_le(f"x_bidual_norm_upper[{k}]", Z.norm(Xb[k]), Z.norm(Zs[k])))

    # simulated local reflexivity on E = span{x_k**, v}
    E = span(np.vstack([Xb, v[None]])).basis.T
    dev = abs(iso_scale - 1.0)
    unit_E = _unit_vectors_of(Z, E, seed)
    T = lambda x: iso_scale * np.asarray(x)
    fixed = max(Z.norm(T(e) - e) for e in unit_E)
    s.append(_le("lrp_fixed_points", fixed, half))
    compat = max(abs(float(zs @ T(e)) - float(zs @ e)) for e in unit_E)
    s.append(_le("lrp_functional_compatibility", compat, half * max(abs(float(zs @ e)) for e in unit_E) + dev))
    img = Z.norms(iso_scale * unit_E)
    s.append(_le("lrp_sandwich_lower", 1 - half, float(img.min())))
    s.append(_le("lrp_sandwich_upper", float(img.max()), 1 + half))

    Xk = iso_scale * Xb
    s.append(_le("lrp_image_distance", Z.norm(theta @ Xk - T(v)), (1 + half) * d_x))
    s.append(_le("lrp_image_distance_lt_eps", (1 + half) * d_x, eps, strict=True))
    tv = Z.norm(T(v) - v)
    s.append(_le("fixed_point_defect_v", tv, half * Z.norm(v)))
    d_k = Z.norm(theta @ Xk - v)
    s.append(_le("x_k_distance", d_k, (1 + half) * d_x + tv))

    nk = Z.norms(Xk)
    Xt = Xk / nk[:, None]
    errs = Z.norms(Xk - Xt)
    for k in range(len(theta)):
        nb = Z.norm(Xb[k])
        s.append(_le(f"x_k_functional_compatibility[{k}]", abs(float(zs @ Xk[k]) - float(zs @ Xb[k])),
                     dev * abs(float(zs @ Xb[k]))))
        s.append(_eq(f"normalisation_error_identity[{k}]", errs[k], abs(nk[k] - 1.0)))
        s.append(_le(f"normalisation_error_split[{k}]", errs[k], abs(nk[k] - nb) + abs(nb - 1.0)))
        s.append(_le(f"normalisation_error_scale[{k}]", abs(nk[k] - nb), half * nb))
        s.append(_le(f"normalisation_error_bound[{k}]", errs[k], eps))
        s.append(_le(f"tilde_slice_chain[{k}]", float(zs @ Xk[k]) - errs[k], float(zs @ Xt[k])))
        s.append(_le(f"tilde_x_slice_2eps[{k}]", 1 - 2 * eps, float(zs @ Xt[k]), strict=True))
    d_t = Z.norm(theta @ Xt - v)
    s.append(_le("final_distance_chain", d_t, float(errs.max()) + d_k))
    s.append(_le("final_distance_2eps", d_t, 2 * eps))

    Xt_basis = X.basis.T
    Xs, B, fnorm, out, ocheck = _restrict(Z, Xt_basis, zs, u, v, Xt, theta, 2 * eps)
    s.extend(_restriction_steps(fnorm, float(zs @ u), 1 - half))
    s.extend(_output_steps(ocheck, 2 * eps))
    rep.output_witness, rep.output_check = out, ocheck
    rep.subspace_basis, rep.ambient_points = B, Xt
    rep.extra["input_witness"] = w.to_dict()
    return rep
