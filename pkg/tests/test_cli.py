import json
import subprocess
import sys

import numpy as np
import pytest

from lushlab import __version__
from lushlab.cli import main
from lushlab.report import canonical, digest

SPACES = {
    "linf2": {"type": "lp", "dim": 2, "p": "inf"},
    "linf3": {"type": "lp", "dim": 3, "p": "inf"},
    "l2": {"type": "lp", "dim": 2, "p": "2"},
    "hexagon": {
        "type": "polytope",
        "vertices": [[np.cos(t), np.sin(t)] for t in np.pi / 3 * np.arange(6)],
    },
    "lsum": {"type": "sum", "kind": "l1", "left": {"type": "lp", "dim": 1, "p": "1"}, "right": {"type": "lp", "dim": 2, "p": "inf"}},
    "msum": {"type": "sum", "kind": "linf", "left": {"type": "lp", "dim": 2, "p": "inf"}, "right": {"type": "lp", "dim": 2, "p": "1"}},
}


@pytest.fixture
def files(tmp_path):
    paths = {}

    def put(name, obj):
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(obj if not isinstance(obj, np.ndarray) else obj.tolist(), default=float))
        paths[name] = str(p)

    for name, obj in SPACES.items():
        put(name, obj)
    put("nilpotent", [[0, 1], [0, 0]])
    put("p_left2", [[1, 0], [0, 0]])
    put("p_right3", [[0, 0, 0], [0, 1, 0], [0, 0, 1]])
    put("p_left4", np.diag([1.0, 1, 0, 0]))
    put("x12", [[1, 0, 0], [0, 1, 0]])
    put("diag", [[1, 1]])
    return paths


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out else None), err


def test_radius_nilpotent(files, capsys):
    code, rep, _ = run(["radius", files["linf2"], "--op", files["nilpotent"], "--exact"], capsys)
    assert code == 0
    assert rep["results"]["numerical_radius"] == 1
    assert set(rep) == {"command", "inputs_digest", "seed", "results", "version"}
    assert rep["version"] == __version__


def test_almost_cl_hexagon_fails(files, capsys):
    code, rep, _ = run(["almost-cl", files["hexagon"]], capsys)
    assert code == 2
    assert rep["results"]["almost_cl"] is False
    np.testing.assert_allclose(rep["results"]["certificate"]["vertex"], [-0.5, 0.8660254], atol=1e-7)


def test_lush_euclidean_small_eps_fails(files, capsys):
    code, rep, _ = run(["lush", files["l2"], "--u", "1", "0", "--v", "0", "1", "--eps", "0.05", "--seed", "0"], capsys)
    assert code == 2
    assert rep["results"]["best_distance"] >= 0.5


def test_lush_grid(files, capsys):
    code, rep, _ = run(["lush", files["linf3"], "--eps", "0.05", "0.1", "--grid", "10", "--seed", "1"], capsys)
    assert code == 0
    assert [r["pass_fraction"] for r in rep["results"]["results"]] == [1, 1]


def test_classify_and_m_ideal(files, capsys):
    assert run(["classify-proj", files["l2"], "--matrix", files["p_left2"], "--seed", "0"], capsys)[0] == 2
    assert run(["classify-proj", files["linf2"], "--matrix", files["p_left2"], "--seed", "0"], capsys)[0] == 0
    assert run(["m-ideal", files["linf3"], "--subspace", files["x12"], "--seed", "0"], capsys)[0] == 0
    assert run(["m-ideal", files["linf2"], "--subspace", files["diag"], "--seed", "0"], capsys)[0] == 2


def test_transfers(files, capsys):
    base = ["--seed", "2", "--eps", "0.3"]
    code, rep, _ = run(["transfer", "m-summand", files["msum"], "--projection", files["p_left4"],
                        "--u", "1", "0.5", "0", "0", "--v", "-0.2", "1", "0", "0", *base], capsys)
    assert code == 0 and rep["results"]["passed"]
    code, rep, _ = run(["transfer", "l-summand", files["lsum"], "--projection", files["p_right3"],
                        "--u", "0", "1", "0.2", "--v", "0", "-0.5", "1", *base], capsys)
    assert code == 0 and rep["results"]["eta_used"] == pytest.approx(0.3**2 / 16)
    code, rep, _ = run(["transfer", "m-ideal", files["linf3"], "--subspace", files["x12"],
                        "--u", "1", "0", "0", "--v", "0.3", "-1", "0", "--iso-scale", "0.85", *base], capsys)
    assert code == 0 and rep["results"]["target_epsilon"] == pytest.approx(0.6)
    code, rep, _ = run(["transfer", "m-ideal", files["linf3"], "--subspace", files["x12"],
                        "--u", "1", "0", "0", "--v", "0.3", "-1", "0", "--iso-scale", "1.25", *base], capsys)
    assert code == 2 and "iso_scale" in rep["results"]["precondition_failed"]


def test_space_check_and_norm(files, capsys):
    code, rep, _ = run(["space", "check", files["hexagon"]], capsys)
    assert code == 0 and rep["results"]["ball_vertices"] == 6
    code, rep, _ = run(["norm", files["linf2"], "--point", "3", "-4"], capsys)
    assert rep["results"]["value"] == 4


@pytest.mark.parametrize(
    "argv, needle",
    [
        (["bogus"], "invalid choice"),
        (["index", "{linf2}", "--budget", "10"], "--seed is required"),
        (["norm", "{linf2}", "--point", "1"], "expected 2 coordinates"),
        (["norm", "/nonexistent.json", "--point", "1"], "cannot read"),
        (["lush", "{linf2}", "--u", "2", "0", "--v", "1", "0", "--eps", "0.1", "--seed", "0"], "not a unit vector"),
        (["radius", "{linf2}", "--op", "{x12}"], "$[0]: expected a row of 2 numbers"),
    ],
)
def test_usage_errors_exit_1(files, capsys, argv, needle):
    argv = [a.format(**files) for a in argv]
    code, rep, err = run(argv, capsys)
    assert code == 1 and rep is None
    assert needle in err


def test_malformed_space_names_field(files, capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"type": "sum", "kind": "l1", "left": {"type": "lp", "dim": 1, "p": "7"}, "right": SPACES["linf2"]}))
    code, _, err = run(["space", "check", str(bad)], capsys)
    assert code == 1 and "$.left.p" in err


def test_reports_are_byte_identical(files, capsys, monkeypatch):
    argv = ["index", files["hexagon"], "--budget", "50", "--seed", "3"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first
    grid = ["lush", files["msum"], "--eps", "0.1", "--grid", "8", "--seed", "3"]
    main(grid)
    serial = capsys.readouterr().out
    monkeypatch.setenv("LUSHLAB_THREADS", "4")
    main(grid)
    assert capsys.readouterr().out == serial


def test_module_entry_point(files):
    out = subprocess.run([sys.executable, "-m", "lushlab", "almost-cl", files["linf2"]], capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["results"]["almost_cl"] is True


def test_canonical_serialisation():
    assert canonical({"b": 1, "a": [0.1, -0.0, True, None]}) == '{"a":[0.10000000000000001,0,true,null],"b":1}'
    assert canonical(np.array([1.5, np.inf])) == '[1.5,"inf"]'
    assert digest({"a": 1, "b": 2}) == digest({"b": 2, "a": 1})
    with pytest.raises(TypeError):
        canonical(object())
