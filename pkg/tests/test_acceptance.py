"""Acceptance suite: ten end-to-end criteria at their stated tolerances.

Each test records one ``PASS``/``FAIL`` line; ``conftest.py`` prints them in
the terminal summary, and running this file directly prints them as well.
"""

import json
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from lushlab.lmstruct import Kind, coordinate_projection, is_m_ideal, span
from lushlab.lush import almost_cl_check, find_lush_witness, lushness_grid_report, verify_witness
from lushlab.numrange import numerical_index_upper, numerical_radius, numerical_radius_exact, operator_norm
from lushlab.spaces import L1, LINF, direct_sum, lp, polytope, regular_polygon, subspace_space
from lushlab.transfer import transfer_l_summand, transfer_m_ideal, transfer_m_summand

import oracles

RESULTS: dict[int, tuple[bool, str]] = {}


def record(n: int, title: str, passed: bool, detail: str) -> None:
    RESULTS[n] = (passed, f"criterion {n:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}")
    print(RESULTS[n][1])


def _inequality_margins(report):
    return [s.margin for s in report.steps if s.relation != "=="]


def _verify_in_subspace(Z, report, u, v, target):
    X, B = subspace_space(Z, report.subspace_basis)
    uy = np.linalg.lstsq(B, u, rcond=None)[0]
    vy = np.linalg.lstsq(B, v, rcond=None)[0]
    w = report.output_witness
    assert w.epsilon == pytest.approx(target)
    return verify_witness(X, uy, vy, w).valid


def _pair(Z, mask, rng):
    u, v = rng.standard_normal((2, Z.dim)) * mask
    return u / Z.norm(u), v / Z.norm(v)


def test_criterion_01_exact_radius():
    t0 = time.perf_counter()
    worst = 0.0
    for kind, n in [("linf", 2), ("l1", 2), ("linf", 3)]:
        space = lp(n, "inf" if kind == "linf" else 1)
        V, F = oracles.classical_extremes(kind, n)
        for s in range(100):
            T = np.random.default_rng([1, n, s]).standard_normal((n, n))
            worst = max(worst, abs(numerical_radius_exact(space, T) - oracles.brute_force_radius(V, F, T)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 10
    record(1, "exact v(T) vs brute-force duality pairs", ok, f"max error {worst:.2e}, {elapsed:.2f} s")
    assert ok


def _all_descriptors():
    spaces = [lp(n, p) for n in (1, 2, 3, 4) for p in (1, 2, "inf")]
    spaces += [regular_polygon(6), regular_polygon(8), polytope(np.vstack([np.eye(3), -np.eye(3), [[1, 1, 1], [-1, -1, -1]]]))]
    spaces += [
        direct_sum(lp(2, "inf"), lp(2, 1), LINF),
        direct_sum(lp(2, "inf"), lp(2, 1), L1),
        direct_sum(lp(1, 1), regular_polygon(6), L1),
        direct_sum(lp(2, 2), lp(1, 1), LINF),
        direct_sum(lp(2, 2), lp(2, "inf"), L1),
    ]
    return spaces


def test_criterion_02_radius_below_norm():
    spaces = _all_descriptors()
    worst = -np.inf
    for k in range(1000):
        rng = np.random.default_rng([2, k])
        space = spaces[k % len(spaces)]
        T = rng.standard_normal((space.dim, space.dim))
        gap = numerical_radius(space, T, 256, k) - operator_norm(space, T, 256, k)
        worst = max(worst, gap)
    ok = worst <= 1e-9
    record(2, "v(T) <= ||T|| over 1000 draws", ok, f"max v - ||T|| = {worst:.3e} over {len(spaces)} descriptors")
    assert ok


def test_criterion_03_classical_lushness():
    t0 = time.perf_counter()
    fractions = []
    for n in (2, 3, 4):
        for p in (1, "inf"):
            rep = lushness_grid_report(lp(n, p), [0.05, 0.1], 100, seed=n)
            fractions += [r["pass_fraction"] for r in rep["results"]]
    grids_ok = min(fractions) == 1.0
    u, v = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    out = find_lush_witness(lp(2, 2), u, v, 0.25, budget=256, seed=0)
    sweep, _ = oracles.euclidean_plane_best_distance(u, v, 0.25, directions=10_000, arc_points=64)
    euclid_ok = (not out.success) and out.best_distance >= 0.5 and sweep >= 0.5
    elapsed = time.perf_counter() - t0
    ok = grids_ok and euclid_ok and elapsed < 60
    record(
        3,
        "lushness grids and Euclidean failure",
        ok,
        f"grid min pass fraction {min(fractions)}; Euclidean eps=0.25 search success={out.success} "
        f"best={out.best_distance:.4f}, sweep oracle best={sweep:.4f} (needs >= 0.5); {elapsed:.1f} s",
    )
    assert ok


def test_criterion_04_almost_cl():
    t0 = time.perf_counter()
    classical = all(almost_cl_check(lp(n, p)).holds for n in (1, 2, 3, 4) for p in (1, "inf"))
    holds, cert = almost_cl_check(regular_polygon(6))
    vertex_ok = not holds and np.allclose(cert["vertex"], [-0.5, 0.8660254], atol=1e-7)
    elapsed = time.perf_counter() - t0
    ok = classical and vertex_ok and elapsed < 5
    record(4, "almost-CL", ok, f"classical all pass={classical}, hexagon certificate {np.round(cert['vertex'], 7).tolist()}, {elapsed:.2f} s")
    assert ok


def test_criterion_05_index_one():
    t0 = time.perf_counter()
    lows = {}
    for n in (1, 2, 3):
        for p in (1, "inf"):
            lows[f"l{p}^{n}"] = numerical_index_upper(lp(n, p), 10_000, seed=n).value
    euclid = numerical_index_upper(lp(2, 2), 10_000, seed=0).value
    elapsed = time.perf_counter() - t0
    ok = min(lows.values()) >= 1 - 1e-6 and euclid <= 0.05 and elapsed < 120
    record(5, "index-one consistency", ok, f"min over l1/linf {min(lows.values()):.12f}, Euclidean {euclid:.2e}, {elapsed:.1f} s")
    assert ok


def test_criterion_06_m_summand():
    Z = direct_sum(lp(2, "inf"), lp(2, 1), LINF)
    P = np.diag([1.0, 1.0, 0.0, 0.0])
    bad, least = 0, np.inf
    for k in range(50):
        rng = np.random.default_rng([6, k])
        u, v = _pair(Z, np.r_[1, 1, 0, 0], rng)
        eps = rng.uniform(0.05, 0.5)
        w = find_lush_witness(Z, u, v, eps / 2, seed=k).witness
        rep = transfer_m_summand(Z, P, u, v, w, eps)
        least = min(least, min(_inequality_margins(rep)))
        if not (rep.passed and _verify_in_subspace(Z, rep, u, v, eps)):
            bad += 1
    ok = bad == 0 and least >= 0
    record(6, "M-summand transfer", ok, f"{50 - bad}/50 reports pass, least inequality margin {least:.3e}")
    assert ok


def test_criterion_07_l_summand():
    Z = direct_sum(lp(1, 1), lp(2, "inf"), L1)
    P = np.diag([0.0, 1.0, 1.0])
    bad, least = 0, np.inf
    required = ("ineq_1_real_attainment", "ineq_2_imag_degenerate", "delta_k_range", "eta_constraint_3eta_2sqrt", "final_distance_lt_eps")
    for k in range(50):
        rng = np.random.default_rng([7, k])
        u, v = _pair(Z, np.r_[0, 1, 1], rng)
        eps = rng.uniform(0.05, 0.5)
        rep = transfer_l_summand(Z, P, u, v, eps, seed=k)
        names = {s.name.split("[")[0] for s in rep.steps}
        least = min(least, min(_inequality_margins(rep)))
        if not (rep.passed and set(required) <= names and rep.eta_used == min(eps**2 / 16, eps / 6)
                and _verify_in_subspace(Z, rep, u, v, eps)):
            bad += 1
    ok = bad == 0 and least >= 0
    record(7, "L-summand transfer", ok, f"{50 - bad}/50 reports pass, least inequality margin {least:.3e}")
    assert ok


def test_criterion_08_m_ideal():
    Z = lp(3, "inf")
    X = span([[1, 0, 0], [0, 1, 0]])
    ideal = is_m_ideal(Z, X).holds
    runs, bad = 0, 0
    for k in range(10):
        rng = np.random.default_rng([8, k])
        u, v = _pair(Z, np.r_[1, 1, 0], rng)
        eps = rng.uniform(0.05, 0.5)
        for scale in (1 - eps / 2, 1.0, 1 + eps / 2):
            rep = transfer_m_ideal(Z, X, u, v, eps, scale, seed=k)
            runs += 1
            if not (rep.passed and _verify_in_subspace(Z, rep, u, v, 2 * eps)):
                bad += 1
    rejected = not is_m_ideal(lp(2, "inf"), span([[1, 1]])).holds
    ok = ideal and bad == 0 and rejected
    record(8, "M-ideal transfer", ok, f"span(e1,e2) ideal={ideal}, {runs - bad}/{runs} transfers pass, span(1,1) rejected={rejected}")
    assert ok


def test_criterion_09_sums():
    X, Y = lp(2, "inf"), lp(2, 1)
    details, ok = [], True
    for kind, expected in ((LINF, Kind.M), (L1, Kind.L)):
        Z = direct_sum(X, Y, kind)
        rep = lushness_grid_report(Z, [0.1], 100, seed=9)
        kinds = {coordinate_projection(Z, side).classification for side in ("left", "right")}
        ok &= rep["lush_at_grid_scale"] and kinds == {expected}
        details.append(f"{Z.label}: grid {rep['results'][0]['pass_fraction']}, projections {sorted(k.value for k in kinds)}")
    record(9, "sums of lush spaces", ok, "; ".join(details))
    assert ok


def _cli_cases(tmp):
    def put(name, obj):
        path = os.path.join(tmp, name)
        with open(path, "w") as fh:
            json.dump(obj, fh)
        return path

    linf2 = put("linf2.json", {"type": "lp", "dim": 2, "p": "inf"})
    linf3 = put("linf3.json", {"type": "lp", "dim": 3, "p": "inf"})
    l2 = put("l2.json", {"type": "lp", "dim": 2, "p": "2"})
    hexagon = put("hex.json", {"type": "polytope", "vertices": regular_polygon(6).ball_vertices().tolist()})
    lsum = put("lsum.json", {"type": "sum", "kind": "l1", "left": {"type": "lp", "dim": 1, "p": "1"},
                             "right": {"type": "lp", "dim": 2, "p": "inf"}})
    op = put("op.json", [[0.3, 1.0], [-2.0, 0.5]])
    proj = put("proj.json", [[0, 0, 0], [0, 1, 0], [0, 0, 1]])
    sub = put("sub.json", [[1, 0, 0], [0, 1, 0]])
    return [
        ["space", "check", hexagon],
        ["norm", hexagon, "--point", "0.3", "0.7"],
        ["radius", l2, "--op", op, "--sample", "500", "--seed", "4"],
        ["index", hexagon, "--budget", "200", "--seed", "4"],
        ["lush", l2, "--u", "1", "0", "--v", "0", "1", "--eps", "0.1", "--seed", "4"],
        ["lush", linf3, "--eps", "0.1", "--grid", "20", "--seed", "4"],
        ["almost-cl", hexagon],
        ["classify-proj", lsum, "--matrix", proj, "--seed", "4"],
        ["m-ideal", linf3, "--subspace", sub, "--seed", "4"],
        ["transfer", "l-summand", lsum, "--projection", proj, "--u", "0", "1", "0.1", "--v", "0", "0.2", "-1", "--eps", "0.2", "--seed", "4"],
        ["transfer", "m-ideal", linf3, "--subspace", sub, "--u", "1", "0", "0", "--v", "0", "1", "0", "--eps", "0.2", "--iso-scale", "0.9", "--seed", "4"],
        ["radius", linf2, "--op", put("nil.json", [[0, 1], [0, 0]]), "--exact"],
    ]


def test_criterion_10_determinism(tmp_path):
    cases = _cli_cases(str(tmp_path))
    env = dict(os.environ)
    mismatched = []
    for argv in cases:
        outs = []
        for threads in ("1", "3"):
            env["LUSHLAB_THREADS"] = threads
            res = subprocess.run([sys.executable, "-m", "lushlab", *argv], capture_output=True, env=env)
            outs.append((res.returncode, res.stdout))
        if outs[0] != outs[1] or not outs[0][1]:
            mismatched.append(argv[0])
    ok = not mismatched
    record(10, "byte-identical CLI reports", ok, f"{len(cases) - len(mismatched)}/{len(cases)} invocations identical across repeated runs")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
