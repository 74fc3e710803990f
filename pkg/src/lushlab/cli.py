"""Command-line front end.

Every subcommand prints one canonical JSON report on standard output.  Exit
status: 0 when all mathematical checks pass, 2 when any fails, 1 for usage
or input errors (diagnostics go to standard error).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .lmstruct import Kind, annihilator, classify_projection, is_m_ideal, span
from .lush import (
    LushWitness,
    Strategy,
    almost_cl_check,
    find_lush_witness,
    lushness_grid_report,
    thread_count,
    verify_witness,
)
from .numrange import (
    DEFAULT_SAMPLES,
    numerical_index_upper,
    numerical_radius,
    numerical_radius_exact,
    numerical_radius_sampled,
    operator_norm,
    operator_norm_is_exact,
)
from .report import canonical, make_report
from .spaces import TAU_NORM, Space, SpaceError, space_from_dict, space_to_dict
from .transfer import TransferError, transfer_l_summand, transfer_m_ideal, transfer_m_summand

EXIT_PASS, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    """Bad arguments or malformed input files (exit 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


# ----------------------------------------------------------------------
# input files


def _load_json(path: str, what: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {what} file {path!r}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} file {path!r}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def _load_space(path: str) -> tuple[Space, dict]:
    data = _load_json(path, "space")
    try:
        return space_from_dict(data), data
    except SpaceError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_matrix(path: str, dim: int, what: str) -> tuple[np.ndarray, list]:
    data = _load_json(path, what)
    if not isinstance(data, list) or len(data) != dim:
        raise UsageError(f"{path}: $: expected {dim} rows")
    for i, row in enumerate(data):
        if not isinstance(row, list) or len(row) != dim or not all(_is_number(c) for c in row):
            raise UsageError(f"{path}: $[{i}]: expected a row of {dim} numbers")
    return np.array(data, dtype=float), data


def _load_subspace(path: str, dim: int):
    data = _load_json(path, "subspace")
    if not isinstance(data, list) or not data:
        raise UsageError(f"{path}: $: expected a non-empty list of spanning vectors")
    for i, row in enumerate(data):
        if not isinstance(row, list) or len(row) != dim or not all(_is_number(c) for c in row):
            raise UsageError(f"{path}: $[{i}]: expected a vector of {dim} numbers")
    return span(data, dim), data


def _load_witness(path: str | None, dim: int):
    if path is None:
        return None, None
    data = _load_json(path, "witness")
    if not isinstance(data, dict):
        raise UsageError(f"{path}: $: expected an object")
    try:
        w = LushWitness.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: $: {exc}") from None
    if w.functional.size != dim:
        raise UsageError(f"{path}: $.functional: expected {dim} entries")
    return w, data


def _is_number(c) -> bool:
    return isinstance(c, (int, float)) and not isinstance(c, bool)


def _vector(space: Space, values, name: str) -> np.ndarray:
    if values is None:
        raise UsageError(f"--{name} is required")
    if len(values) != space.dim:
        raise UsageError(f"--{name}: expected {space.dim} coordinates, got {len(values)}")
    return np.array(values, dtype=float)


def _unit_vector(space: Space, values, name: str) -> np.ndarray:
    x = _vector(space, values, name)
    if abs(space.norm(x) - 1.0) > TAU_NORM:
        raise UsageError(f"--{name}: not a unit vector (norm {space.norm(x):.17g})")
    return x


def _need_seed(args) -> int:
    if args.seed is None:
        raise UsageError(f"{args.command}: --seed is required")
    return args.seed


def _eps(value: float) -> float:
    if not 0 < value < 1:
        raise UsageError(f"--eps must lie in (0, 1), got {value}")
    return value


# ----------------------------------------------------------------------
# subcommands; each returns (results, inputs, seed, passed)


def cmd_space_check(args):
    space, data = _load_space(args.file)
    checks = {"symmetric_and_spanning": True, "dimension_within_cap": True}
    results = {"label": space.label, "dim": space.dim, "polyhedral": space.is_polyhedral, "space": space_to_dict(space)}
    if space.is_polyhedral:
        V = space.ball_vertices()
        F = space.dual_ball_vertices()
        pair = V @ F.T
        checks["vertices_unit_norm"] = bool(np.all(np.abs(space.norms(V) - 1.0) <= TAU_NORM))
        checks["dual_pairing_at_most_1"] = bool(pair.max() <= 1.0 + TAU_NORM)
        checks["every_vertex_normed"] = bool(np.all(pair.max(axis=1) >= 1.0 - TAU_NORM))
        checks["every_facet_attained"] = bool(np.all(pair.max(axis=0) >= 1.0 - TAU_NORM))
        results.update({"ball_vertices": len(V), "dual_ball_vertices": len(F)})
    results["checks"] = checks
    passed = all(checks.values())
    results["pass"] = passed
    return results, {"space": data}, None, passed


def cmd_norm(args):
    space, data = _load_space(args.file)
    x = _vector(space, args.point, "point")
    value = space.dual_norm(x) if args.dual else space.norm(x)
    results = {"norm": "dual" if args.dual else "primal", "value": value, "pass": True}
    return results, {"space": data, "point": x.tolist(), "dual": args.dual}, None, True


def cmd_radius(args):
    space, data = _load_space(args.file)
    T, mdata = _load_matrix(args.op, space.dim, "operator")
    seed = args.seed
    if args.exact:
        if space.is_polyhedral:
            v = numerical_radius_exact(space, T)
        elif space.is_euclidean:
            v = numerical_radius(space, T)
        else:
            raise UsageError(f"--exact: no exact method for {space.label}; use --sample N --seed S")
        method = "exact"
    elif args.sample is not None or not operator_norm_is_exact(space):
        seed = _need_seed(args)
        count = args.sample if args.sample is not None else DEFAULT_SAMPLES
        if count < 1:
            raise UsageError("--sample must be positive")
        v = numerical_radius_sampled(space, T, count, seed)
        method = f"sampled({count})"
    else:
        v = numerical_radius(space, T)
        method = "exact"
    count = args.sample or DEFAULT_SAMPLES
    norm = operator_norm(space, T, count, seed or 0)
    ok = v <= norm + TAU_NORM
    results = {
        "numerical_radius": v,
        "operator_norm": norm,
        "operator_norm_exact": operator_norm_is_exact(space),
        "method": method,
        "checks": {"radius_at_most_norm": ok},
        "pass": ok,
    }
    return results, {"space": data, "operator": mdata, "method": method}, seed, ok


def cmd_index(args):
    space, data = _load_space(args.file)
    seed = _need_seed(args)
    if args.budget < 1:
        raise UsageError("--budget must be at least 1")
    est = numerical_index_upper(space, args.budget, seed, refine=args.refine)
    results = {
        "index_upper_bound": est.value,
        "operator": est.operator,
        "exact_evaluation": est.exact_evaluation,
        "trials": est.trials,
        "refined": est.refined,
        "pass": True,
    }
    return results, {"space": data, "budget": args.budget, "refine": args.refine}, seed, True


def cmd_lush(args):
    space, data = _load_space(args.file)
    seed = _need_seed(args)
    eps_list = [_eps(e) for e in args.eps]
    inputs = {"space": data, "eps": eps_list, "strategy": args.strategy, "budget": args.budget}
    if args.grid is not None:
        if args.grid < 0:
            raise UsageError("--grid must be non-negative")
        rep = lushness_grid_report(space, eps_list, args.grid, seed, args.strategy, args.budget, thread_count())
        rep["pass"] = rep["lush_at_grid_scale"]
        inputs["grid"] = args.grid
        return rep, inputs, seed, rep["pass"]
    if len(eps_list) != 1:
        raise UsageError("--eps takes a single value without --grid")
    u = _unit_vector(space, args.u, "u")
    v = _unit_vector(space, args.v, "v")
    out = find_lush_witness(space, u, v, eps_list[0], args.strategy, args.budget, seed)
    results = {"success": out.success, "best_distance": out.best_distance, "trace": out.trace}
    passed = out.success
    if out.success:
        check = verify_witness(space, u, v, out.witness)
        results["witness"] = out.witness.to_dict()
        results["verification"] = check.to_dict()
        passed = check.valid
    results["pass"] = passed
    inputs.update({"u": u.tolist(), "v": v.tolist()})
    return results, inputs, seed, passed


def cmd_almost_cl(args):
    space, data = _load_space(args.file)
    res = almost_cl_check(space)
    return {"almost_cl": res.holds, "certificate": res.certificate, "pass": res.holds}, {"space": data}, None, res.holds


def cmd_classify_proj(args):
    space, data = _load_space(args.file)
    seed = _need_seed(args)
    P, mdata = _load_matrix(args.matrix, space.dim, "matrix")
    proj = classify_projection(space, P, args.trials, seed)
    passed = proj.classification is not Kind.NEITHER
    results = {
        "classification": proj.classification.value,
        "counterexample": proj.counterexample,
        "report": proj.report,
        "pass": passed,
    }
    return results, {"space": data, "matrix": mdata, "trials": args.trials}, seed, passed


def cmd_m_ideal(args):
    space, data = _load_space(args.file)
    seed = _need_seed(args)
    X, sdata = _load_subspace(args.subspace, space.dim)
    if not 0 < X.rank < space.dim:
        raise UsageError(f"{args.subspace}: subspace rank must lie strictly between 0 and {space.dim}")
    res = is_m_ideal(space, X, args.trials, seed)
    results = {
        "m_ideal": res.holds,
        "subspace_basis": X.basis,
        "annihilator_basis": annihilator(space, X).basis,
        "report": res.report,
        "pass": res.holds,
    }
    return results, {"space": data, "subspace": sdata, "trials": args.trials}, seed, res.holds


def cmd_transfer(args):
    space, data = _load_space(args.file)
    seed = _need_seed(args)
    eps = _eps(args.eps)
    u = _unit_vector(space, args.u, "u")
    v = _unit_vector(space, args.v, "v")
    w, wdata = _load_witness(args.witness, space.dim)
    inputs = {"space": data, "u": u.tolist(), "v": v.tolist(), "eps": eps, "witness": wdata, "kind": args.kind}
    try:
        if args.kind == "m-ideal":
            if args.subspace is None:
                raise UsageError("transfer m-ideal: --subspace is required")
            X, sdata = _load_subspace(args.subspace, space.dim)
            inputs.update({"subspace": sdata, "iso_scale": args.iso_scale})
            rep = transfer_m_ideal(space, X, u, v, eps, args.iso_scale, w, args.budget, seed)
        else:
            if args.projection is None:
                raise UsageError(f"transfer {args.kind}: --projection is required")
            P, mdata = _load_matrix(args.projection, space.dim, "projection")
            inputs["projection"] = mdata
            if args.kind == "m-summand":
                if w is None:
                    out = find_lush_witness(space, u, v, eps / 2, Strategy.BOTH, args.budget, seed)
                    if not out.success:
                        raise TransferError(f"no lushness witness found in Z at eps/2 (best {out.best_distance:.6g})")
                    w = out.witness
                rep = transfer_m_summand(space, P, u, v, w, eps, seed=seed)
            else:
                rep = transfer_l_summand(space, P, u, v, eps, w, args.budget, seed)
    except TransferError as exc:
        return {"precondition_failed": str(exc), "pass": False}, inputs, seed, False
    results = rep.to_dict()
    results["pass"] = rep.passed
    return results, inputs, seed, rep.passed


# ----------------------------------------------------------------------
# parser


def _add_seed(p, required_note: str = "required"):
    p.add_argument("--seed", type=int, default=None, help=f"RNG seed ({required_note})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lushlab", description="Lushness, numerical index and L/M-structure tools.")
    parser.add_argument("--version", action="version", version=f"lushlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("space", help="space-definition utilities")
    spsub = sp.add_subparsers(dest="action", required=True)
    p = spsub.add_parser("check", help="audit the invariants of a space definition")
    p.add_argument("file")
    p.set_defaults(func=cmd_space_check, command="space check")

    p = sub.add_parser("norm", help="norm (or dual norm) of a point")
    p.add_argument("file")
    p.add_argument("--point", type=float, nargs="+", required=True)
    p.add_argument("--dual", action="store_true")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("radius", help="numerical radius and operator norm")
    p.add_argument("file")
    p.add_argument("--op", required=True, help="operator matrix file (JSON rows)")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true")
    mode.add_argument("--sample", type=int, metavar="N")
    _add_seed(p, "required when sampling")
    p.set_defaults(func=cmd_radius)

    p = sub.add_parser("index", help="upper bound on the numerical index")
    p.add_argument("file")
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--refine", type=int, default=8)
    _add_seed(p)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("lush", help="lushness witness search or grid report")
    p.add_argument("file")
    p.add_argument("--u", type=float, nargs="+")
    p.add_argument("--v", type=float, nargs="+")
    p.add_argument("--eps", type=float, nargs="+", required=True)
    p.add_argument("--grid", type=int, metavar="N", help="random pairs added to all vertex pairs")
    p.add_argument("--strategy", choices=[s.value for s in Strategy], default=Strategy.BOTH.value)
    p.add_argument("--budget", type=int, default=256)
    _add_seed(p)
    p.set_defaults(func=cmd_lush)

    p = sub.add_parser("almost-cl", help="almost-CL check for polyhedral spaces")
    p.add_argument("file")
    p.set_defaults(func=cmd_almost_cl)

    p = sub.add_parser("classify-proj", help="classify a projection as L, M or neither")
    p.add_argument("file")
    p.add_argument("--matrix", required=True)
    p.add_argument("--trials", type=int, default=256)
    _add_seed(p)
    p.set_defaults(func=cmd_classify_proj)

    p = sub.add_parser("m-ideal", help="decide whether a subspace is an M-ideal")
    p.add_argument("file")
    p.add_argument("--subspace", required=True, help="JSON list of spanning vectors")
    p.add_argument("--trials", type=int, default=64)
    _add_seed(p)
    p.set_defaults(func=cmd_m_ideal)

    p = sub.add_parser("transfer", help="push a lushness witness down to a subspace")
    p.add_argument("kind", choices=["m-summand", "l-summand", "m-ideal"])
    p.add_argument("file")
    p.add_argument("--projection", help="projection matrix file (summand paths)")
    p.add_argument("--subspace", help="spanning vectors file (m-ideal path)")
    p.add_argument("--u", type=float, nargs="+", required=True)
    p.add_argument("--v", type=float, nargs="+", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--iso-scale", type=float, default=1.0)
    p.add_argument("--witness", help="Z-witness file overriding the internal search")
    p.add_argument("--budget", type=int, default=256)
    _add_seed(p)
    p.set_defaults(func=cmd_transfer)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        results, inputs, seed, passed = args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SpaceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = make_report(args.command, inputs, seed, results, __version__)
    sys.stdout.write(canonical(report) + "\n")
    return EXIT_PASS if passed else EXIT_FAIL


run = main


if __name__ == "__main__":
    sys.exit(main())
