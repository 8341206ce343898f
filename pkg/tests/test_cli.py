from __future__ import annotations

import csv
import io
import json
import math

import jsonschema
import pytest

from hmt import cli
from hmt.record import RUN_SCHEMA, SCHEMA_ID

HEADER = "beta,alpha,eps,n,F,c_eps,lambda_eps,r_eps_log,residual,iters,converged"


def load(path):
    record = json.loads(path.read_text())
    jsonschema.validate(record, RUN_SCHEMA)
    assert record["schema"] == SCHEMA_ID
    return record


def test_solve_writes_valid_record(tmp_path):
    out = tmp_path / "r.json"
    assert cli.main(["solve", "--beta", "0.5", "--alpha", "0", "--eps", "0.2", "--n", "512", "--out", str(out)]) == 0
    rec = load(out)
    assert rec["command"] == "solve"
    assert rec["outputs"]["F"] >= 2.0 * math.pi
    assert rec["outputs"]["converged"] is True
    assert rec["params"] == {"beta": 0.5, "alpha": 0.0, "eps": 0.2, "n": 512, "grading": [3.0, 3.0]}


def test_solve_rerun_is_byte_identical(tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert cli.main(["solve", "--beta", "0", "--eps", "0.5", "--n", "256", "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_timestamp_from_source_date_epoch(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    out = tmp_path / "e.json"
    assert cli.main(["eigen", "--mode", "laplacian", "--n", "256", "--out", str(out)]) == 0
    assert load(out)["timestamp"] == "1970-01-01T00:00:00Z"


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--beta", "1.5", "--eps", "0.1"],
        ["solve", "--beta", "0.5"],
        ["frobnicate"],
        ["eigen", "--n", "10"],
        ["eigen", "--mode", "neumann"],
        ["bubble", "--rmax", "5"],
        ["solve", "--beta", "0", "--eps", "0.3", "--tol", "0"],
        ["sweep", "/nonexistent/config.txt"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    assert cli.main(argv) == 2
    assert "usage error" in capsys.readouterr().err


def test_alpha_near_lambda1_is_a_numerical_failure(capsys):
    assert cli.main(["solve", "--beta", "0", "--alpha", "1.9", "--eps", "0.3", "--n", "256"]) == 1
    assert "numerical failure" in capsys.readouterr().err


def test_eigen_and_green(tmp_path):
    out = tmp_path / "e.json"
    assert cli.main(["eigen", "--mode", "hardy", "--n", "512", "--out", str(out)]) == 0
    assert load(out)["outputs"]["eigenvalue"] == pytest.approx(1.9232128, rel=1e-6)
    out = tmp_path / "g.json"
    assert cli.main(["green", "--mode", "laplacian", "--n", "1024", "--out", str(out)]) == 0
    assert abs(load(out)["outputs"]["a0"]) <= 1e-3


def test_bubble_prints_mass(capsys):
    assert cli.main(["bubble", "--beta", "0", "--rmax", "1000"]) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("mass = ")
    assert abs(float(line.split("=")[1]) - 1.0) <= 1e-4


def test_testfn_record(tmp_path):
    out = tmp_path / "t.json"
    argv = ["testfn", "--beta", "0.25", "--alpha-frac", "0.5", "--eps", "1e-4", "1e-6", "--n", "1024", "--out", str(out)]
    assert cli.main(argv) == 0
    members = load(out)["outputs"]["members"]
    assert [m["verdict"] for m in members] == ["PASS", "PASS"]


def write_config(tmp_path, text, name="sweep.txt"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_sweep_csv(tmp_path, capsys):
    cfg = write_config(tmp_path, "# three eps\nbeta = 0.5\nalpha = 0\neps = 0.4, 0.3, 0.2\nn = 512\n")
    assert cli.main(["sweep", cfg]) == 0
    text = capsys.readouterr().out
    lines = text.splitlines()
    assert lines[0] == HEADER
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 3
    fs = [float(r["F"]) for r in rows]
    assert all(b >= a - 1e-8 for a, b in zip(fs, fs[1:]))
    assert all(r["converged"] == "true" for r in rows)


def test_sweep_rerun_and_threads_byte_identical(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, "beta = 0, 0.5\nalpha = 0\neps = 0.4, 0.3\nn = 256\n")
    outs = []
    for threads in ("1", "2", "2"):
        monkeypatch.setenv("HMT_THREADS", threads)
        out = tmp_path / f"s{len(outs)}.csv"
        assert cli.main(["sweep", cfg, "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    assert len(outs[0].decode().splitlines()) == 5


def test_empty_sweep(tmp_path):
    cfg = write_config(tmp_path, "beta = 0.5\nalpha = 0\neps =\n")
    out = tmp_path / "e.csv"
    assert cli.main(["sweep", cfg, "--out", str(out)]) == 0
    assert out.read_text() == HEADER + "\n"


@pytest.mark.parametrize(
    "text",
    [
        "beta = 0.5\nalpha = 0\neps = 0.2, 0.3\n",
        "beta = 0.5\nalpha = 0\neps = 0.2\ncolour = red\n",
        "beta = 0.5\nbeta = 0.25\nalpha = 0\neps = 0.2\n",
        "beta = 0.5\nalpha = 0\n",
        "beta = 0.5\nalpha = 0\neps = 0.2\ntol = -1\n",
        "beta = 0.5\nalpha = 0\neps = 0.2\nmonotone = perhaps\n",
    ],
)
def test_bad_sweep_configs(tmp_path, text):
    assert cli.main(["sweep", write_config(tmp_path, text)]) == 2


def test_parse_sweep_config():
    cfg = cli.parse_sweep_config("beta = 0.5, 0.25  # two\nalpha=0\neps = 0.3,0.2\nmax_iter = 50\nmonotone = off\n")
    assert cfg.betas == (0.5, 0.25) and cfg.eps == (0.3, 0.2) and cfg.ns == (512,)
    assert cfg.solver == {"max_iter": 50, "monotone": False}
