"""Tests for the command line interface."""

import csv
import json

import pytest

from specwin.cli import main
from specwin.program import builtin_program, serialize_program


def test_run_summary(capsys):
    rc = main(
        [
            "run",
            "--builtin",
            "repeated_t",
            "--d",
            "11",
            "--count",
            "10",
            "--latency",
            "linear:0.4",
        ]
    )
    out = capsys.readouterr().out
    assert rc == 0
    assert "runtime        442 rounds" in out
    assert "mean 20.0, max 20" in out


def test_run_writes_csv(tmp_path, capsys):
    out = tmp_path / "trace.csv"
    rc = main(
        [
            "run",
            "--builtin",
            "repeated_t",
            "--d",
            "5",
            "--count",
            "3",
            "--latency",
            "linear:0.4",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["round", "patch_row", "patch_col", "label"]
    assert len(rows) > 1
    capsys.readouterr()


def test_run_writes_svg_and_json(tmp_path, capsys):
    svg = tmp_path / "trace.svg"
    blob = tmp_path / "result.json"
    for out in (svg, blob):
        rc = main(
            [
                "run",
                "--builtin",
                "msd_15to1",
                "--d",
                "3",
                "--latency",
                "fixed:6",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
    assert svg.read_text().startswith("<svg")
    data = json.loads(blob.read_text())
    assert data["runtime_rounds"] > 0
    capsys.readouterr()


def test_run_accepts_program_file(tmp_path, capsys):
    prog = builtin_program("repeated_t", 5, count=2)
    path = tmp_path / "prog.json"
    path.write_text(json.dumps(serialize_program(prog)))
    rc = main(
        ["run", "--program-file", str(path), "--latency", "linear:0.4"]
    )
    out = capsys.readouterr().out
    assert rc == 0
    assert "d=5" in out


def test_run_rejects_bad_latency(capsys):
    rc = main(["run", "--latency", "warp:3"])
    err = capsys.readouterr().err
    assert rc == 2
    assert "latency" in err


def test_run_rejects_missing_file(capsys):
    rc = main(["run", "--program-file", "/nonexistent/prog.json"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_run_rejects_bad_builtin_param(capsys):
    rc = main(["run", "--builtin", "msd_15to1", "--count", "4"])
    assert rc == 2
    assert "count" in capsys.readouterr().err


def test_sweep_latency_table(capsys):
    rc = main(
        [
            "sweep-latency",
            "--builtin",
            "repeated_t",
            "--d",
            "11",
            "--count",
            "5",
            "--no-stall",
            "linear:0.4",
            "fixed:2d",
        ]
    )
    out = capsys.readouterr().out
    assert rc == 0
    lines = out.strip().splitlines()
    assert len(lines) == 3
    assert "linear:0.4" in lines[1]
    assert "fixed:2d" in lines[2]


def test_predictor_eval_table_and_csv(tmp_path, capsys):
    out = tmp_path / "rates.csv"
    rc = main(
        ["predictor-eval", "--d", "5", "--shots", "50", "--out", str(out)]
    )
    text = capsys.readouterr().out
    assert rc == 0
    for name in ("1step", "2step", "3step"):
        assert name in text
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
    assert all(0.0 <= float(r["accuracy"]) <= 1.0 for r in rows)


def test_recovery_eval_lists_all_strategies(capsys):
    rc = main(
        [
            "recovery-eval",
            "--builtin",
            "zigzag_chain",
            "--d",
            "3",
            "--count",
            "20",
            "--spec",
            "stochastic",
            "--latency",
            "fixed:4",
            "--shots",
            "5",
        ]
    )
    out = capsys.readouterr().out
    assert rc == 0
    for rec in ("optimistic", "adjacent", "pessimistic"):
        assert rec in out


def test_processors_report(capsys):
    rc = main(
        [
            "processors",
            "--builtin",
            "repeated_t",
            "--d",
            "7",
            "--count",
            "5",
            "--strategy",
            "parallel",
            "--spec",
            "stochastic",
            "--seed",
            "3",
        ]
    )
    out = capsys.readouterr().out
    assert rc == 0
    assert "recommended" in out
    assert "runtime delta" in out


def test_processors_auto_flag(capsys):
    rc = main(
        [
            "run",
            "--builtin",
            "repeated_t",
            "--d",
            "7",
            "--count",
            "5",
            "--strategy",
            "parallel",
            "--spec",
            "stochastic",
            "--processors",
            "auto",
        ]
    )
    out = capsys.readouterr().out
    assert rc == 0
    assert "runtime" in out


def test_unknown_command_exits_nonzero():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
