import json
import math
import subprocess
import sys

import pytest

from gcflow import cli, io as gio


def gcflow(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "gcflow", *map(str, args)],
                          capture_output=True, text=True, cwd=cwd)


def small_config(tmp_path, **over):
    raw = {"schema": 1, "metric": {"builtin": "catenoid"}, "march": {"x0": 0.0, "x1": 0.25},
           "grid": {"n": 32}, "solver": {"epsilon": 4e-3, "dx": 1 / 32},
           "output": "out"}
    raw.update(over)
    p = tmp_path / "run.json"
    p.write_text(json.dumps(raw))
    return p


def test_curvature_stdout():
    r = gcflow("curvature", "--metric", "catenoid", "--x0", 0, "--x1", 1, "--y0", 0, "--y1", 0, "--n", 5, "--ny", 2)
    assert r.returncode == 0, r.stderr
    lines = r.stdout.splitlines()
    assert lines[0] == "x,y,kappa" and len(lines) == 11
    x, _, k = map(float, lines[-1].split(","))
    assert x == 1.0 and abs(k + 1 / math.cosh(1.0) ** 4) <= 1e-12


def test_gasref(tmp_path):
    out = tmp_path / "g.csv"
    assert cli.main(["gasref", "--gamma", "1.4", "--n", "11", "--out", str(out)]) == 0
    t = out.read_text().splitlines()
    assert t[0] == "q,rho,c,type" and len(t) == 12
    assert t[1].endswith(",subsonic")


def test_solve_and_reconstruct(tmp_path):
    cfg = small_config(tmp_path)
    assert cli.main(["--threads", "1", "solve", "--config", str(cfg)]) == 0
    d = gio.read_json(tmp_path / "out" / "diagnostics.json")
    assert d["status"] == "ok" and d["steps"] == 8
    assert d["run"]["metric"] and len(d["run"]["config_hash"]) == 16
    f = tmp_path / "out" / "field.csv"
    assert cli.main(["reconstruct", "--field", str(f), "--metric", "catenoid", "--out", str(tmp_path / "m")]) == 0
    assert (tmp_path / "m" / "mesh.obj").exists()
    side = gio.read_json(tmp_path / "m" / "mesh.json")
    assert side["nx"] == 9 and side["ny"] == 32 and side["order"] == 4
    rep = tmp_path / "v.json"
    assert cli.main(["verify", "--field", str(f), "--metric", "catenoid", "--out", str(rep)]) == 0
    assert gio.read_json(rep)["max_gauss_residual"] <= 1e-12


def test_pipeline(tmp_path):
    cfg = small_config(tmp_path)
    assert cli.main(["pipeline", "--config", str(cfg)]) == 0
    out = tmp_path / "out"
    for name in ("field.csv", "diagnostics.json", "mesh.obj", "mesh.json", "verify.json"):
        assert (out / name).exists()
    v = gio.read_json(out / "verify.json")
    assert v["forms_order"] == 4 and v["max_I_error"] < 1e-2


def test_exit_codes(tmp_path):
    assert gcflow("nonsense").returncode == 1
    assert gcflow("solve").returncode == 1
    assert gcflow("solve", "--config", tmp_path / "missing.json").returncode == 3
    bad = small_config(tmp_path, solver={"epsilon": 0}, grid={"n": 1})
    r = gcflow("solve", "--config", bad)
    assert r.returncode == 1
    assert "solver.epsilon" in r.stderr and "grid.n" in r.stderr
    assert gcflow("--threads", 0, "gasref", "--gamma", 1.4).returncode == 1


def test_numerical_failure_keeps_partial_output(tmp_path):
    cfg = small_config(tmp_path, metric={"builtin": "helicoid"}, initial={"kind": "exact-helicoid"},
                       march={"x0": 0.0, "x1": 0.5}, grid={"n": 16}, solver={"epsilon": 1e-3})
    r = gcflow("solve", "--config", cfg)
    assert r.returncode == 2
    assert "characteristic" in r.stderr
    d = gio.read_json(tmp_path / "out" / "diagnostics.json")
    assert d["status"] != "ok"
    assert (tmp_path / "out" / "field.csv").exists()


def test_threads_env(monkeypatch):
    monkeypatch.setenv("GCFLOW_THREADS", "3")
    args = cli.build_parser().parse_args(["gasref", "--gamma", "1.4"])
    assert cli._threads(args) == 3
    monkeypatch.setenv("GCFLOW_THREADS", "x")
    with pytest.raises(cli.UsageError):
        cli._threads(args)
