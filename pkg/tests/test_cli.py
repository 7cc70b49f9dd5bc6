import csv
import json
import subprocess
import sys

import pytest

from packshift import cli
from packshift.core import insert, rect2d, vector, write_trace
from packshift.framework import MonitorViolation, StepDiagnostics
from packshift.harness import CSV_COLUMNS


@pytest.fixture
def vec_trace(tmp_path):
    path = tmp_path / "two.jsonl"
    write_trace(path, [insert(1, vector("a", ["0.6", "0.1"])), insert(2, vector("b", ["0.6", "0.1"]))])
    return path


def test_generate_then_run(tmp_path, capsys):
    trace = tmp_path / "t.jsonl"
    assert cli.main(["generate", "--spec", '{"kind": "churn", "n": 120, "p": 0.3}', "--seed", "4",
                     "--out", str(trace)]) == 0
    out = tmp_path / "r.csv"
    code = cli.main(["run", "--config", '{"problem": "strip2d", "epsilon": "1/4"}', "--trace", str(trace),
                     "--strict", "--out", str(out)])
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert len(rows) == 121 and rows[0] == list(CSV_COLUMNS)


def test_run_json_from_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"problem": "vector", "d": 2, "epsilon": "1/10",
                               "generator": {"kind": "uniform", "n": 30}, "seed": 2}))
    out = tmp_path / "r.json"
    assert cli.main(["run", "--config", str(cfg), "--check", "--out", str(out)]) == 0
    obj = json.loads(out.read_text())
    assert obj["summary"]["events"] == 30 and obj["summary"]["violations"] == 0


def test_run_is_byte_identical(tmp_path):
    args = ["run", "--config", '{"problem": "bin2d", "generator": {"kind": "churn", "n": 80, "p": 0.3}}',
            "--seed", "9", "--out"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(args + [str(a)]) == 0
    assert cli.main(args + [str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_solution_roundtrip_validates(tmp_path, vec_trace, capsys):
    sol = tmp_path / "s.json"
    assert cli.main(["run", "--config", '{"problem": "vector"}', "--trace", str(vec_trace),
                     "--out", str(tmp_path / "r.csv"), "--solution-out", str(sol)]) == 0
    capsys.readouterr()
    assert cli.main(["validate", "--trace", str(vec_trace), "--solution", str(sol)]) == 0
    assert json.loads(capsys.readouterr().out)["valid"] is True


def test_validate_reports_overlap(tmp_path, capsys):
    trace = tmp_path / "t.jsonl"
    write_trace(trace, [insert(0, rect2d("a", "0.5", "0.5")), insert(1, rect2d("b", "0.5", "0.5"))])
    sol = {"domain": "bin", "d": 2, "placements": {
        "a": {"bin": 0, "offset": ["0", "0"]},
        "b": {"bin": 0, "offset": ["1/4", "1/4"]},
    }}
    assert cli.main(["validate", "--trace", str(trace), "--solution", json.dumps(sol)]) == 2
    report = json.loads(capsys.readouterr().out)
    assert report["valid"] is False and report["overlaps"]


def test_oracle_vector_exact(vec_trace, capsys):
    assert cli.main(["oracle", "--trace", str(vec_trace), "--kind", "vector-exact"]) == 0
    assert json.loads(capsys.readouterr().out)["opt"] == 2


def test_oracle_at_time(vec_trace, capsys):
    assert cli.main(["oracle", "--trace", str(vec_trace), "--kind", "vector-exact", "--at", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["opt"] == 1 and out["items"] == 1


def test_oracle_bounds(vec_trace, capsys):
    assert cli.main(["oracle", "--trace", str(vec_trace), "--kind", "bounds"]) == 0
    assert json.loads(capsys.readouterr().out)["lower"] == "2/1"  # ceil of the first-coordinate load 6/5


def test_oracle_kind_mismatch(vec_trace):
    assert cli.main(["oracle", "--trace", str(vec_trace), "--kind", "bottom-left"]) == 3


@pytest.mark.parametrize("config", [
    '{"problem": "teleport"}',
    '{"problem": "strip2d", "epsilon": "2/3"}',
    '{"problem": "strip2d", "frobnicate": 1}',
    "{not json",
])
def test_bad_config_is_an_input_error(config, vec_trace):
    assert cli.main(["run", "--config", config, "--trace", str(vec_trace)]) == 3


def test_malformed_trace(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"t": 0, "op": "depart", "id": "ghost"}\n')
    assert cli.main(["run", "--config", '{"problem": "vector"}', "--trace", str(bad)]) == 3


def test_strict_violation_exits_2(monkeypatch, vec_trace, capsys):
    def failing(config, events=None):
        raise MonitorViolation(StepDiagnostics(7, "insert", "x", 3, 3, 1, False, 0, None, bound=2, bound_ok=False,
                                               violations=["cost 3 exceeds bound 2"]))

    monkeypatch.setattr(cli, "run_experiment", failing)
    assert cli.main(["run", "--config", '{"problem": "vector"}', "--trace", str(vec_trace), "--strict"]) == 2
    assert "t=7" in capsys.readouterr().err


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "packshift.cli", "generate", "--spec", '{"kind": "uniform", "n": 2}'],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert len(proc.stdout.splitlines()) == 2


def test_empty_trace_gives_empty_report(tmp_path):
    trace = tmp_path / "empty.jsonl"
    trace.write_text("")
    out = tmp_path / "r.csv"
    assert cli.main(["run", "--config", '{"problem": "strip2d"}', "--trace", str(trace), "--out", str(out)]) == 0
    assert out.read_text() == ",".join(CSV_COLUMNS) + "\n"
