import csv
import json
import subprocess
import sys

import pytest

from ino_pca.cli import main

TINY = ["--p", "100", "--t-max", "1", "--trials", "2"]


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_theory_steady_learning(capsys):
    assert main(["theory", "steady", "--omega", "1", "--tau", "0.5"]) == 0
    assert capsys.readouterr().out.strip() == "branch=learning Q_s=0.881917 lambda_s=2.0"


def test_theory_steady_unstable(capsys):
    assert main(["theory", "steady", "--omega", "0.1", "--tau", "0.5"]) == 0
    assert capsys.readouterr().out.strip() == "branch=unstable Q_s=0.000000 lambda_s=1.207107"


def test_theory_phase_csv(tmp_path):
    assert main(["theory", "phase", "--tau", "0.5", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "theory_phase.csv")
    assert rows[0] == ["omega", "Q_s_theory", "lambda_s_theory", "branch", "omega_c"]
    assert {round(float(r[4]), 3) for r in rows[1:]} == {0.207}
    for r in rows[1:]:
        assert (r[3] == "learning") == (float(r[0]) > 0.20710678118654754)


def test_theory_ode_csv(tmp_path):
    assert main(["theory", "ode", "--t-max", "5", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "theory_ode.csv")
    assert rows[0][:3] == ["t", "Q", "lambda"]
    assert float(rows[-1][1]) == pytest.approx(0.44950975280491107, abs=1e-6)


def test_simulate_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", *TINY, "--out", str(a)]) == 0
    assert main(["simulate", *TINY, "--out", str(b), "--threads", "2"]) == 0
    assert (a / "simulate.csv").read_bytes() == (b / "simulate.csv").read_bytes()
    rows = _rows(a / "simulate.csv")
    assert rows[0] == ["t", "Q_mean", "Q_std", "lambda_mean", "lambda_std", "Q_theory", "lambda_theory"]
    assert len(rows) == 12


def test_simulate_manifest_and_replay(tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", *TINY, "--seed", "5", "--out", str(out)]) == 0
    manifest = json.loads((out / "simulate.manifest.json").read_text())
    for key in ("subcommand", "argv", "config", "seed", "outputs", "version", "wall_time_s"):
        assert key in manifest
    assert manifest["seed"] == 5 and manifest["config"]["p"] == 100
    again = tmp_path / "again"
    assert main(["replay", str(out / "simulate.manifest.json"), "--out", str(again)]) == 0
    assert (again / "simulate.csv").read_bytes() == (out / "simulate.csv").read_bytes()


def test_config_file_is_overridden_by_flags(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("p = 80\nt_max = 1.0\ntrials = 1\nseed = 3\n")
    assert main(["simulate", "--config", str(cfg), "--seed", "4", "--out", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "simulate.manifest.json").read_text())
    assert manifest["config"]["p"] == 80 and manifest["seed"] == 4


def test_no_theory_drops_columns(tmp_path):
    assert main(["simulate", *TINY, "--no-theory", "--out", str(tmp_path)]) == 0
    assert _rows(tmp_path / "simulate.csv")[0] == ["t", "Q_mean", "Q_std", "lambda_mean", "lambda_std"]


def test_config_error_exit_code(tmp_path, capsys):
    assert main(["simulate", "--p", "1", "--out", str(tmp_path)]) == 2
    assert "p must be at least 2" in capsys.readouterr().err
    assert main(["simulate", "--xi", "gauss", "--out", str(tmp_path)]) == 2


def test_numerical_failure_exit_code(tmp_path, capsys):
    code = main(["simulate", "--p", "50", "--tau", "200", "--t-max", "5", "--trials", "1", "--out", str(tmp_path)])
    assert code == 3
    assert "seed=0" in capsys.readouterr().err


def test_argparse_errors_exit_two():
    assert main(["simulate", "--p", "many"]) == 2


def test_help_lists_defaults():
    out = subprocess.run([sys.executable, "-m", "ino_pca", "simulate", "--help"], capture_output=True, text=True,
                         check=True).stdout
    for text in ("(default: 10000)", "(default: 0.5)", "(default: 30)", "(default: 20)", "(default: warm:0.1)",
                 "(default: ino:0.5)"):
        assert text in out


def test_switch_and_multipc_commands(tmp_path):
    assert main(["switch", "--p", "100", "--switch-t", "2", "--t-max", "4", "--trials", "1",
                 "--algos", "ada-ino,ccipca:4", "--out", str(tmp_path)]) == 0
    assert main(["multipc", "--p", "64", "--r", "2", "--omegas", "2,1", "--t-max", "2",
                 "--out", str(tmp_path)]) == 0
    assert any(p.name.startswith("switch") for p in tmp_path.iterdir())
    assert (tmp_path / "multipc.csv").exists()


def test_multipc_bad_data_file(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,oops\n")
    assert main(["multipc", "--data", str(bad), "--r", "1", "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "row 2" in err and "column 2" in err


def test_check_moments(tmp_path, capsys):
    assert main(["check", "moments", "--p", "200", "--n-resamples", "2000", "--out", str(tmp_path)]) == 0
    assert "within 3 s.e." in capsys.readouterr().out
