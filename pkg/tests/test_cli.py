from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from sqgsheets.cli import UsageError, main, parse_config, read_config_file


def run(tmp_path, *args):
    return main([*args, "--out-dir", str(tmp_path)])


def test_no_args_is_usage_error(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "sqgsheets"], capture_output=True, text=True)
    assert out.returncode == 2 and "usage" in out.stderr


def test_help_exits_zero(capsys):
    assert main(["solve", "--help"]) == 0
    assert "--eps-switch" in capsys.readouterr().out


def test_defaults():
    cfg = parse_config(["solve"])
    sc = cfg.solver()
    assert (sc.N, sc.M, sc.tol, sc.max_iter, sc.eps_switch) == (32, 256, 1e-9, 25, 0.02)


def test_file_values_and_flag_override(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# sweep settings\neps-max = 0.03\nmodes = 16\ngrid = 128\nstrict-display-formulas = true\n")
    cfg = parse_config(["continue", "--config", str(f), "--modes", "8"])
    assert cfg.eps_max == 0.03 and cfg.grid == 128 and cfg.modes == 8 and cfg.strict_display_formulas


@pytest.mark.parametrize(
    "text, msg",
    [("bogus = 1\n", "unknown key"), ("modes = many\n", "malformed"), ("modes\n", "key = value")],
)
def test_bad_config_files(tmp_path, text, msg):
    f = tmp_path / "bad.cfg"
    f.write_text(text)
    with pytest.raises(UsageError, match=msg):
        read_config_file(f)
    assert main(["solve", "--config", str(f)]) == 2


@pytest.mark.parametrize(
    "args",
    [
        ["solve", "--eps", "0", "--eps-max", "0.1"],
        ["solve", "--eps", "abc"],
        ["solve", "--unknown-flag"],
        ["solve", "--modes", "100"],
        ["continue", "--eps", "0.1", "--eps-max", "0.05"],
        ["solve", "--d", "0.5"],
        ["frobnicate"],
    ],
)
def test_usage_errors(args):
    assert main(args) == 2


def test_solve_trivial(tmp_path, capsys):
    assert run(tmp_path, "solve", "--eps", "0", "--d", "1") == 0
    out = capsys.readouterr().out
    assert "W = 0.25" in out and "0.5" in out and "sign +" in out
    rec = json.loads((tmp_path / "records.json").read_text())
    assert len(rec) == 1
    assert all(v == 0 for v in rec[0]["p_coeffs"] + rec[0]["q_coeffs"])
    assert (tmp_path / "curve_0.csv").exists()


def test_solve_csv_format(tmp_path):
    assert run(tmp_path, "solve", "--eps", "0.02", "--format", "csv", "--modes", "8", "--grid", "64") == 0
    rows = list(csv.reader((tmp_path / "records.csv").open()))
    assert len(rows) == 2 and rows[0][0] == "eps"


def test_continue_example(tmp_path):
    args = ("continue", "--eps-max", "0.1", "--eps-step", "0.01", "--d", "1", "--modes", "32", "--grid", "256")
    assert run(tmp_path, *args) == 0
    assert len(json.loads((tmp_path / "records.json").read_text())) == 10
    rows = list(csv.reader((tmp_path / "wtable.csv").open()))
    assert rows[0] == ["eps", "W", "W_paper_116", "W_paper_224"] and len(rows) == 11
    assert len(list(tmp_path.glob("curve_*.csv"))) == 10


def test_nonconvergence_exit_code(tmp_path):
    assert run(tmp_path, "solve", "--eps", "0.05", "--tol", "1e-30", "--max-iter", "2") == 3


def test_partial_sweep_is_flushed(tmp_path):
    assert run(tmp_path, "continue", "--eps-max", "0.2", "--eps-step", "0.1", "--max-iter", "1") == 3
    assert json.loads((tmp_path / "records.json").read_text()) == []
    assert (tmp_path / "wtable.csv").exists()


def test_unwritable_out_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["point-vortex", "--t-end", "0.1", "--out-dir", str(blocker / "sub")]) == 2


def test_numeric_error_exit_code(tmp_path):
    assert run(tmp_path, "solve", "--eps", "0.5", "--d", "1") == 4


def test_probe_multipliers(tmp_path, capsys):
    assert run(tmp_path, "probe-multipliers") == 0
    out = capsys.readouterr().out
    assert "mu_j(2M)" in out
    rows = list(csv.reader((tmp_path / "blocks.csv").open()))
    assert len(rows) == 65
    assert (tmp_path / "multipliers.csv").exists()


def test_point_vortex(tmp_path, capsys):
    assert run(tmp_path, "point-vortex", "--m", "2", "--d", "1", "--stride", "100") == 0
    assert "0.25" in capsys.readouterr().out
    rep = json.loads((tmp_path / "wstar.json").read_text())
    assert rep["wstar"] == 0.25 and rep["endpoint_deviation"] < 1e-6
    assert (tmp_path / "trajectory.csv").exists()


def test_verify(tmp_path):
    assert run(tmp_path, "verify", "--eps", "0.03", "--strict-display-formulas") == 0
    rep = json.loads((tmp_path / "verify.json").read_text())
    assert rep["tangency_sup"] < 1e-7 and rep["strength_rel_std"] < 1e-6
    assert rep["dual_path_gap_F"] < 1e-9 and "literal_gap_F" in rep
    assert run(tmp_path, "verify", "--eps", "0") == 2


def test_repeat_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["solve", "--eps", "0.03", "--out-dir", str(out)]) == 0
    for name in ("records.json", "curve_0.03.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
