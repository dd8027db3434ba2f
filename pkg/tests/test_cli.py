import csv
import subprocess
import sys

import numpy as np
import pytest

import riskmkt.cli as cli
from riskmkt.exceptions import MonotonicityViolation, SolverFailure


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_example1(tmp_path, capsys):
    code, out, _ = run(["run", "example1", "--out", str(tmp_path)], capsys)
    assert code == 0
    rows = read(tmp_path / "welfare.csv")
    assert [r["stage"] for r in rows] == [str(m) for m in range(9)]
    assert [int(r["num_instruments"]) for r in rows] == [2**m for m in range(9)]
    w = np.array([float(r["welfare"]) for r in rows])
    assert np.all(np.diff(w) <= 1e-8)
    assert abs(float(rows[-1]["gap_to_complete"])) <= 1e-7
    prices = read(tmp_path / "prices.csv")
    assert list(prices[0]) == ["stage", "instrument_index", "bundle_lo", "bundle_hi", "price"]
    assert len(prices) == sum(2**m for m in range(9))
    assert prices[1] == {"stage": "1", "instrument_index": "1", "bundle_lo": "1", "bundle_hi": "128", "price": "0"}
    diag = read(tmp_path / "diagnostics.csv")
    assert list(diag[0]) == ["stage", "max_pairing_gap", "duality_gap"]
    assert float(diag[-1]["max_pairing_gap"]) <= 1e-7
    assert "complete-market welfare 2.380859375" in out


def test_example2_spike_bundle_rows(tmp_path, capsys):
    assert run(["run", "example2", "--out", str(tmp_path), "--stages", "4"], capsys)[0] == 0
    rows = [r for r in read(tmp_path / "prices.csv") if int(r["bundle_lo"]) <= 64 <= int(r["bundle_hi"])]
    assert [r["stage"] for r in rows] == ["0", "1", "2", "3"]
    assert float(rows[1]["price"]) <= 1e-7 and float(rows[2]["price"]) <= 1e-7


def test_example3_prints_prices(tmp_path, capsys):
    code, out, _ = run(["run", "example3", "--out", str(tmp_path)], capsys)
    assert code == 0
    assert "lambda = (1.0000, 1.0000, 0.4180)" in out
    last = [r for r in read(tmp_path / "prices.csv") if r["stage"] == "3"]
    assert [(r["bundle_lo"], r["bundle_hi"]) for r in last] == [("1", "30"), ("2", "30"), ("3", "30")]


def test_stages_and_dump(tmp_path, capsys):
    code, _, _ = run(["run", "example7", "--out", str(tmp_path), "--stages", "2", "--dump-lp"], capsys)
    assert code == 0
    assert [r["stage"] for r in read(tmp_path / "welfare.csv")] == ["1", "2"]
    assert sorted(p.name for p in (tmp_path / "lp").iterdir()) == ["stage_1.lp.txt", "stage_2.lp.txt"]


def test_deterministic_output(tmp_path, capsys, monkeypatch):
    a, b = tmp_path / "a", tmp_path / "b"
    run(["run", "example2", "--out", str(a), "--stages", "6"], capsys)
    monkeypatch.setenv("RISKMKT_THREADS", "2")
    run(["run", "example2", "--out", str(b), "--stages", "6"], capsys)
    for name in ("welfare.csv", "prices.csv", "diagnostics.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_custom_config(tmp_path, capsys):
    cfg = tmp_path / "m.cfg"
    cfg.write_text(
        "name: tiny\nspace: {uniform: 4}\nagents:\n"
        "  - {loss: [0, 1, 2, 3], risk: {cvar: 0.5}}\n"
        "  - {loss: [3, 1, 2, 0], risk: {polyhedral: [2, 2, 1, 1]}}\n"
    )
    code, out, _ = run(["run", "custom", "--config", str(cfg), "--out", str(tmp_path / "o")], capsys)
    assert code == 0 and out.startswith("tiny:")
    code, _, _ = run(["run", "--config", str(cfg), "--out", str(tmp_path / "p")], capsys)
    assert code == 0


def test_config_errors_exit_1(tmp_path, capsys, monkeypatch):
    bad = tmp_path / "bad.cfg"
    bad.write_text("space: {uniform: 2}\nagents:\n  - {loss: [0, 1], risk: {cvar: 1.5}}\n  - {loss: [1, 0], risk: {cvar: 0.5}}\n")
    code, _, err = run(["run", "--config", str(bad), "--out", str(tmp_path)], capsys)
    assert code == 1 and "line 3: beta out of (0,1]" in err
    assert run(["run", "custom"], capsys)[0] == 1
    assert run(["run", "example1", "--config", str(bad)], capsys)[0] == 1
    assert run(["run", "example1", "--tol", "-1"], capsys)[0] == 1
    monkeypatch.setenv("RISKMKT_THREADS", "0")
    assert run(["run", "example3", "--out", str(tmp_path)], capsys)[0] == 1


def test_solver_failure_exit_2(tmp_path, capsys):
    cfg = tmp_path / "gd.cfg"
    cfg.write_text("space: {uniform: 2}\nagents:\n  - {loss: [0, 1], risk: {gooddeal: 2}}\n  - {loss: [1, 0], risk: {cvar: 0.5}}\n")
    code, _, err = run(["run", "--config", str(cfg), "--out", str(tmp_path)], capsys)
    assert code == 2 and "UnsupportedRiskMeasure" in err


@pytest.mark.parametrize("exc", [SolverFailure, MonotonicityViolation])
def test_run_failures_exit_2(tmp_path, capsys, monkeypatch, exc):
    def boom(*args, **kwargs):
        raise exc("stage 2 failed")

    monkeypatch.setattr(cli, "run_completion", boom)
    code, _, err = run(["run", "example3", "--out", str(tmp_path)], capsys)
    assert code == 2 and exc.__name__ in err
    assert not (tmp_path / "welfare.csv").exists()


def test_help_documents_schemas(capsys):
    with pytest.raises(SystemExit):
        cli.main(["run", "--help"])
    out = capsys.readouterr().out
    for header in ("stage, num_instruments, welfare, gap_to_complete", "stage, instrument_index, bundle_lo, bundle_hi, price", "stage, max_pairing_gap, duality_gap", "RISKMKT_THREADS"):
        assert header in out


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "riskmkt.cli", "run", "example3", "--out", str(tmp_path)], capture_output=True, text=True
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "welfare.csv").exists()
