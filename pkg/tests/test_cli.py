import csv
import io
import json

import pytest

from fracball.cli import SCHEMA_VERSION, SWEEP_COLUMNS, main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_counterexample_sweep(tmp_path, capsys):
    csv_path, js = tmp_path / "sweep.csv", tmp_path / "sweep.json"
    code, _, _ = run(["counterexample", "--n", "3", "--alpha", "1", "--eps-list", "0.1,0.01,0.001",
                      "--csv", str(csv_path), "--json-out", str(js)], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(csv_path.read_text())))
    assert rows[0] == SWEEP_COLUMNS
    assert len(rows) == 4
    norms = [float(r[1]) for r in rows[1:]]
    assert norms[0] > norms[1] > norms[2]
    assert all(float(r[2]) == 0.0 for r in rows[1:])
    summary = json.loads(js.read_text())
    assert summary["schema_version"] == SCHEMA_VERSION
    assert summary["invariants"]["norm_strictly_decreasing"]["pass"]


@pytest.mark.parametrize("argv", [
    ["counterexample", "--eps-list", "0.5"],
    ["counterexample", "--n", "2", "--eps-list", "0.1"],
    ["counterexample", "--eps-list", "0.01,0.1"],
    ["counterexample", "--eps-list", "abc"],
    ["kernels-check", "--s", "1.5"],
    ["mp", "--family", "counterexample", "--theorem", "weak-mp", "--n", "2"],
    ["nonsense"],
    ["--tol-scale", "0", "falsify"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert run(argv, capsys)[0] == 2


def test_reports_are_deterministic(tmp_path, capsys):
    outs = []
    for i in range(2):
        p = tmp_path / f"r{i}.csv"
        assert main(["counterexample", "--eps-list", "0.1,0.01", "--csv", str(p),
                     "--json-out", str(tmp_path / f"r{i}.json")]) == 0
        outs.append((p.read_bytes(), (tmp_path / f"r{i}.json").read_bytes()))
    capsys.readouterr()
    assert outs[0] == outs[1]


def test_kernels_check_small(capsys):
    code, out, _ = run(["kernels-check", "--n", "3", "--s", "0.75", "--pairs", "2"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert set(rep["gates"]) == {"poisson_normalization", "green_cross_representation", "green_bounds"}
    assert all(g["pass"] for g in rep["gates"].values())


def test_kernels_check_seed_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("FRACBALL_SEED", "7")
    _, a, _ = run(["kernels-check", "--pairs", "1"], capsys)
    monkeypatch.setenv("FRACBALL_SEED", "8")
    _, b, _ = run(["kernels-check", "--pairs", "1"], capsys)
    pa = json.loads(a)["gates"]["green_bounds"]["pairs"][0]["x"]
    pb = json.loads(b)["gates"]["green_bounds"]["pairs"][0]["x"]
    assert pa != pb
    monkeypatch.setenv("FRACBALL_SEED", "x")
    assert run(["kernels-check", "--pairs", "1"], capsys)[0] == 2


def _problem(tmp_path, **kw):
    p = tmp_path / "problem.json"
    p.write_text(json.dumps(kw))
    return str(p)


def test_solve_dirichlet_constant(tmp_path, capsys):
    prob = _problem(tmp_path, kind="dirichlet", data="one", n=3, s=0.75,
                    grid={"radial": 5, "rmax": 0.9}, residual=False)
    out = tmp_path / "u.csv"
    code, _, _ = run(["solve", prob, "--out", str(out)], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 5
    assert all(abs(float(r["u"]) - 1) <= 1e-4 for r in rows)


def test_solve_forced_residual(tmp_path, capsys):
    prob = _problem(tmp_path, kind="forced", data="one", n=3, s=0.75,
                    grid={"points": [[0, 0, 0], [0.4, 0, 0]]})
    out = tmp_path / "u.csv"
    code, _, _ = run(["solve", prob, "--out", str(out)], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert max(float(r["residual"]) for r in rows) < 5e-3


@pytest.mark.parametrize("prob", [
    dict(kind="forced", data="nope", grid={"radial": 3}),
    dict(kind="forced", data="one", grid={"radial": 0}),
    dict(kind="forced", data="one", grid={"points": []}),
    dict(kind="other", data="one", grid={"radial": 3}),
    dict(kind="forced", data="one", grid={"points": [[2, 0, 0]]}),
])
def test_solve_bad_problems(tmp_path, capsys, prob):
    assert run(["solve", _problem(tmp_path, **prob)], capsys)[0] == 2


def test_solve_missing_file(tmp_path, capsys):
    assert run(["solve", str(tmp_path / "absent.json")], capsys)[0] == 2


def test_mp_counterexample_strong(capsys):
    code, out, _ = run(["mp", "--family", "counterexample", "--theorem", "strong-mp", "--p", "1.5"], capsys)
    assert code == 0
    v = json.loads(out)["verdict"]
    assert v["status"] == "CRITICAL_CASE" and v["interior_min"] == 0.0


def test_mp_manufactured_weak(capsys):
    code, out, _ = run(["mp", "--family", "manufactured-zero-order", "--u", "1+|x|^2",
                        "--theorem", "weak-mp"], capsys)
    assert code == 0 and json.loads(out)["verdict"]["conclusion_holds"]


def test_mp_inadmissible_drift(capsys):
    code, out, _ = run(["mp", "--family", "manufactured-drift", "--u", "|x|^2",
                        "--theorem", "drift-mp"], capsys)
    assert code == 2
    rep = json.loads(out)
    assert rep["admissible"] is False and rep["admissibility"]["finite"] is False


def test_mp_admissible_drift_and_fractional(capsys):
    code, out, _ = run(["mp", "--family", "manufactured-drift", "--u", "x1+t|x|^2",
                        "--theorem", "drift-mp"], capsys)
    assert code == 0 and json.loads(out)["verdict"]["status"] == "ok"
    code, out, _ = run(["mp", "--family", "dirichlet", "--theorem", "fractional", "--data", "one"], capsys)
    assert code == 0 and json.loads(out)["verdict"]["conclusion_holds"]


def test_mp_theorem_family_mismatch(capsys):
    assert run(["mp", "--family", "sinh", "--theorem", "drift-mp"], capsys)[0] == 2


def test_falsify(tmp_path, capsys):
    js = tmp_path / "f.json"
    code, _, _ = run(["falsify", "--json-out", str(js)], capsys)
    assert code == 0
    rep = json.loads(js.read_text())
    assert rep["falsifications"] == 0 and len(rep["rows"]) >= 20
