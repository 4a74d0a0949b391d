import csv
import json
import subprocess
import sys

import numpy as np
import pytest
from conftest import tiny_instances

from ucfun.cli import main
from ucfun.instance import store_instance
from ucfun.oracle import solve_exhaustive
from ucfun.samplers import API_KEY_ENV


@pytest.fixture
def tiny(tmp_path):
    inst = tiny_instances(1, seed=1003)[0]
    path = tmp_path / "tiny.json"
    store_instance(inst, path)
    return inst, str(path)


def test_evolve_deterministic_report(tmp_path, capsys):
    args = ["evolve", "ten_unit.json", "--sampler", "mutate", "--samples", "500", "--seed", "7", "--workers", "1",
            "--runs", "1"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "evolve_report.json").read_bytes()
    assert a == (tmp_path / "b" / "evolve_report.json").read_bytes()
    timing = json.loads((tmp_path / "a" / "evolve_report.timing.json").read_text())
    assert {"sampling_time_mean", "evaluation_time_mean"} <= set(timing)
    out = capsys.readouterr().out
    assert "best score" in out and "mean sampling time" in out and "mean evaluation time" in out


def test_llm_without_key_is_config_error(monkeypatch, tmp_path, capsys):
    monkeypatch.delenv(API_KEY_ENV, raising=False)
    assert main(["evolve", "ten_unit.json", "--sampler", "llm", "--out", str(tmp_path)]) == 2
    assert API_KEY_ENV in capsys.readouterr().err


def test_unreachable_endpoint_is_backend_failure(monkeypatch, tmp_path):
    monkeypatch.setenv(API_KEY_ENV, "k")
    code = main(["evolve", "ten_unit.json", "--sampler", "llm", "--endpoint", "http://127.0.0.1:9/v1", "--model", "m",
                 "--retries", "0", "--timeout", "0.5", "--samples", "2", "--runs", "1", "--workers", "1",
                 "--out", str(tmp_path)])
    assert code == 3


def test_evolve_tiny_reaches_oracle(tiny, tmp_path):
    inst, path = tiny
    assert main(["evolve", path, "--samples", "400", "--runs", "1", "--workers", "1", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "evolve_report.json").read_text())
    assert doc["best"]["total_cost"] == pytest.approx(solve_exhaustive(inst)[1].total_cost, rel=1e-9)


def test_usage_errors(tmp_path):
    assert main(["evolve"]) == 2
    assert main(["evolve", "ten_unit.json", "--samples", "x"]) == 2
    assert main(["evolve", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    assert main(["oracle", "ten_unit.json", "--out", str(tmp_path)]) == 2
    assert main(["evaluate", "ten_unit.json", "--out", str(tmp_path)]) == 2
    assert main(["evaluate", "ten_unit.json", "--program", "min(", "--out", str(tmp_path)]) == 2
    assert main(["heatmap", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2


def test_compare_table_and_dominance(tiny, tmp_path, capsys):
    _, path = tiny
    code = main(["compare", path, "--budget", "300", "--runs", "2", "--workers", "1", "--population", "20",
                 "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    header = [c.strip() for c in out.splitlines()[0].split("|")]
    assert header == ["Approach", "Sampling Time (s)", "Evaluation Time (s)", "Operating Cost ($)"]
    assert "not reproducible" in out and "5236" in out and "4884" in out
    doc = json.loads((tmp_path / "compare.json").read_text())
    rows = {r["approach"]: r for r in doc["rows"]}
    assert rows["GA"]["operating_cost"] >= rows["Oracle"]["operating_cost"] - 1e-9
    assert rows["FunSearch"]["operating_cost"] >= rows["Oracle"]["operating_cost"] - 1e-9
    assert all(v <= 300 for v in doc["evaluations"].values())
    ga = json.loads((tmp_path / "ga_report.json").read_text())
    fs = json.loads((tmp_path / "funsearch_report.json").read_text())
    assert len(ga["runs"]) == 2 and len(fs["runs"]) == 2
    assert ga["best"]["total_cost"] == min(ga["runs"])


def test_runs_default_twenty():
    from ucfun.cli import build_parser

    parser, _ = build_parser()
    assert parser.parse_args(["compare", "x.json"]).runs == 20
    assert parser.parse_args(["evolve", "x.json"]).runs == 20


def test_ga_and_heatmap(tmp_path, capsys):
    assert main(["ga", "ten_unit.json", "--runs", "1", "--generations", "20", "--out", str(tmp_path)]) == 0
    assert main(["heatmap", str(tmp_path / "ga_report.json"), "--out", str(tmp_path)]) == 0
    grid = list(csv.reader(open(tmp_path / "heatmap.csv")))
    assert len(grid) == 10 and all(len(r) == 24 and set(r) <= {"0", "1"} for r in grid)
    doc = json.loads((tmp_path / "ga_report.json").read_text())
    periods = list(csv.DictReader(open(tmp_path / "heatmap_periods.csv")))
    assert [float(r["total_generation"]) for r in periods] == pytest.approx(doc["best"]["total_generation"])
    assert np.allclose(np.array(doc["best"]["dispatch"]).sum(axis=0), doc["best"]["total_generation"])
    assert [float(r["demand"]) for r in periods] == doc["instance"]["demand"]


def test_heatmap_all_off(tmp_path):
    n, horizon = 2, 3
    report = {"instance": {"N": n, "T": horizon, "demand": [0.0] * horizon},
              "best": {"commitment": [[0] * horizon] * n, "dispatch": [[0.0] * horizon] * n}}
    path = tmp_path / "r.json"
    path.write_text(json.dumps(report))
    assert main(["heatmap", str(path), "--out", str(tmp_path)]) == 0
    assert list(csv.reader(open(tmp_path / "heatmap.csv"))) == [["0"] * 3] * 2


def test_oracle_and_evaluate(tiny, tmp_path):
    inst, path = tiny
    assert main(["oracle", path, "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "oracle_report.json").read_text())
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps(doc["best"]["commitment"]))
    assert main(["evaluate", path, "--commitment", str(grid), "--out", str(tmp_path)]) == 0
    ev = json.loads((tmp_path / "evaluation.json").read_text())
    assert ev["total_cost"] == pytest.approx(doc["best"]["total_cost"])
    assert main(["evaluate", path, "--program=-cost_rate", "--strict", "--out", str(tmp_path)]) == 0


def test_config_file_overridden_by_flags(tiny, tmp_path):
    _, path = tiny
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"samples": 30, "islands": 2, "seed": 4}))
    assert main(["evolve", path, "--config", str(cfg), "--islands", "3", "--runs", "1", "--workers", "1",
                 "--out", str(tmp_path / "a")]) == 0
    doc = json.loads((tmp_path / "a" / "evolve_report.json").read_text())
    assert doc["config"]["max_samples"] == 30 and doc["config"]["islands"] == 3 and doc["seed"] == 4
    # a report's own config block reproduces the run
    assert main(["evolve", path, "--config", str(tmp_path / "a" / "evolve_report.json"), "--runs", "1",
                 "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "evolve_report.json").read_bytes() == (tmp_path / "b" / "evolve_report.json").read_bytes()
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert main(["evolve", path, "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_console_script(tmp_path):
    out = subprocess.run([sys.executable, "-m", "ucfun.cli", "oracle", "missing.json", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert out.returncode == 2 and "error" in out.stderr
