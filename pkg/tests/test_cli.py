"""CLI behaviour: parsing, schemas, determinism, exit codes."""

import argparse
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from percolab.cli import DEFAULT_SEED, _grid_spec, _int_list, _rational, main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out


# ------------------------------------------------------------------ parsing

def test_rational_accepts_fractions_and_decimals():
    assert _rational("1/5") == Fraction(1, 5)
    assert _rational("0.2") == Fraction(1, 5)
    assert _rational("1") == Fraction(1)
    with pytest.raises(argparse.ArgumentTypeError):
        _rational("one third")


def test_int_list():
    assert _int_list("10,50,100") == (10, 50, 100)
    with pytest.raises(argparse.ArgumentTypeError):
        _int_list("10,fifty")
    with pytest.raises(argparse.ArgumentTypeError):
        _int_list(",")


def test_grid_spec_exact_inclusive():
    assert _grid_spec("0.1:0.9:0.2") == (
        Fraction(1, 10), Fraction(3, 10), Fraction(1, 2), Fraction(7, 10), Fraction(9, 10))
    assert _grid_spec("0:1:1/2") == (Fraction(0), Fraction(1, 2), Fraction(1))
    with pytest.raises(argparse.ArgumentTypeError):
        _grid_spec("0:1")
    with pytest.raises(argparse.ArgumentTypeError):
        _grid_spec("1:0:1/2")
    with pytest.raises(argparse.ArgumentTypeError):
        _grid_spec("0:1:0")


# ------------------------------------------------------------------ simulate

def test_simulate_binary_absorbing_zero(capsys):
    code, out = run_cli(capsys, "simulate", "--model", "binary", "--p", "1", "--q", "0",
                        "--init", "zeros", "--width", "12", "--steps", "4")
    lines = out.strip().splitlines()
    assert code == 0
    assert lines[0] == "t,width,count0,countQ,count1"
    assert lines[1:] == [f"{t},12,12,0,0" for t in range(5)]


def test_simulate_envelope_qmarks_decay(capsys):
    code, out = run_cli(capsys, "simulate", "--p", "1/4", "--q", "1/4",
                        "--width", "400", "--steps", "40", "--seed", "1")
    rows = [line.split(",") for line in out.strip().splitlines()[1:]]
    assert code == 0
    assert int(rows[0][3]) == 400          # starts all ?
    assert int(rows[-1][3]) < 40           # ?-density collapses
    for t, width, c0, cq, c1 in rows:
        assert int(c0) + int(cq) + int(c1) == int(width) == 400


def test_simulate_binary_rejects_qmark_init(capsys):
    with pytest.raises(SystemExit):
        main(["simulate", "--model", "binary", "--p", "1/4", "--q", "1/4", "--steps", "2"])


def test_simulate_offset_changes_trajectory(capsys):
    args = ["simulate", "--p", "1/4", "--q", "1/4", "--width", "100",
            "--steps", "10", "--seed", "5"]
    _, base = run_cli(capsys, *args)
    _, shifted = run_cli(capsys, *args, "--offset", "-1")
    assert base != shifted


def test_simulate_json_format(capsys):
    code, out = run_cli(capsys, "simulate", "--p", "0", "--q", "1", "--init", "ones",
                        "--width", "6", "--steps", "2", "--format", "json")
    rows = json.loads(out)
    assert code == 0
    assert rows[0] == {"t": 0, "width": 6, "count0": 0, "countQ": 0, "count1": 6}
    assert rows[-1]["count1"] == 6         # q=1 keeps 1s alive


# ------------------------------------------------------------------ game/sweep

def test_game_repeat_runs_byte_identical(capsys):
    args = ("game", "--version", "v1", "--p", "1/4", "--q", "1/4",
            "--horizons", "5,10", "--samples", "300", "--seed", "7")
    _, first = run_cli(capsys, *args)
    _, second = run_cli(capsys, *args)
    assert first == second
    assert first.splitlines()[0] == \
        "version,p,q,horizon,samples,draw_fraction,ci_low,ci_high,seed"


def test_game_v4_deterministic_no_draws(capsys):
    code, out = run_cli(capsys, "game", "--version", "v4", "--p", "1", "--q", "0",
                        "--horizons", "5", "--samples", "100")
    row = out.strip().splitlines()[1].split(",")
    assert code == 0
    assert row[:6] == ["V4", "1", "0", "5", "100", "0.0"]


def test_game_requires_params(capsys):
    with pytest.raises(SystemExit):
        main(["game", "--version", "v1", "--horizons", "5"])
    with pytest.raises(SystemExit):
        main(["game", "--p", "1/4", "--p-grid", "0:1:1/2", "--q", "1/4"])
    with pytest.raises(SystemExit):
        main(["game", "--p", "3/4", "--q", "1/2", "--horizons", "5", "--samples", "10"])


def test_sweep_skips_outside_region(capsys):
    code, out = run_cli(capsys, "sweep", "--p-grid", "0:1:1/2", "--q-grid", "0:1:1/2",
                        "--horizons", "3", "--samples", "20", "--seed", "2")
    rows = out.strip().splitlines()[1:]
    assert code == 0
    assert len(rows) == 6                  # 9 grid cells minus 3 with p+q>1
    pairs = {tuple(r.split(",")[1:3]) for r in rows}
    assert ("1", "1") not in pairs and ("1", "1/2") not in pairs


def test_game_out_file_matches_stdout(tmp_path, capsys):
    args = ("game", "--version", "v2", "--p", "1/3", "--q", "1/5",
            "--horizons", "4", "--samples", "50")
    _, stdout_text = run_cli(capsys, *args)
    path = tmp_path / "game.csv"
    code = main([*args, "--out", str(path)])
    capsys.readouterr()
    assert code == 0
    assert path.read_text() == stdout_text


# ------------------------------------------------------------------ verify

def test_verify_kernel_all_versions(capsys):
    code, out = run_cli(capsys, "verify", "kernel", "--p", "1/3", "--q", "1/5")
    report = json.loads(out)
    assert code == 0
    assert report["pass"] is True
    assert len(report["reports"]) == 4
    for sub in report["reports"]:
        assert sub["comparisons"] == 27 and sub["mismatches"] == []
    assert report["artifact_version"]


def test_verify_lemmas_coarse(capsys):
    code, out = run_cli(capsys, "verify", "lemmas", "--grid", "coarse")
    report = json.loads(out)
    assert code == 0
    assert report["pass"] is True
    assert len(report["reports"]) == 10    # 5 points x 2 lemmas
    assert all(r["violation_count"] == 0 for r in report["reports"])


def test_verify_tables_sampled(capsys):
    code, out = run_cli(capsys, "verify", "tables", "--measures", "1")
    report = json.loads(out)
    assert code == 0 and report["pass"] is True
    assert len(report["reports"]) == 10    # (3 point masses + 2 random) x 2


def test_verify_weights_small_grid(capsys):
    code, out = run_cli(capsys, "verify", "weights", "--measures", "1", "--grid", "1/2")
    report = json.loads(out)
    assert code == 0 and report["pass"] is True
    assert report["runs"] == report["measures"] * report["points"]
    assert Fraction(report["min_overall_slack"]) >= 0


def test_verify_stationary_informational(capsys):
    code, out = run_cli(capsys, "verify", "stationary", "--p", "1/4", "--q", "1/4",
                        "--width", "500", "--steps", "60")
    report = json.loads(out)
    assert code == 0
    assert report["branch"] == "q>0"
    assert Fraction(report["qmark"]) < Fraction(1, 10)


def test_verify_rejects_csv_format(capsys):
    with pytest.raises(SystemExit):
        main(["verify", "lemmas", "--format", "csv"])


def test_verify_invalid_params_clean_error(capsys):
    code = main(["verify", "kernel", "--p", "2", "--q", "0"])
    captured = capsys.readouterr()
    assert code == 2
    assert "error:" in captured.err


def test_default_seed_is_stable():
    assert DEFAULT_SEED == 1729


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "percolab.cli", "verify", "kernel",
                           "--version", "v1", "--p", "1/2", "--q", "1/4"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["pass"] is True
