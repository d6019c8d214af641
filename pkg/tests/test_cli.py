import math
import subprocess
import sys

import pytest

from configs import write_config
from fractimo.cli import main


def test_run_exit_zero(tmp_path, capsys):
    assert main(["run", str(write_config(tmp_path))]) == 0
    assert "PASS" in capsys.readouterr().out
    assert (tmp_path / "out" / "solution.csv").exists()


def test_verify_energy_and_perturb(tmp_path):
    cfg = write_config(tmp_path, scenario__name="perturb_pair", scenario__n_directions=2)
    assert main(["verify-energy", str(cfg)]) == 0
    assert main(["perturb", str(cfg)]) == 0


def test_converge_prints_table(tmp_path, capsys):
    assert main(["converge", str(write_config(tmp_path)), "--levels", "3"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].split()[:3] == ["level", "dx", "dt"]


def test_converge_too_few_levels_is_config_error(tmp_path):
    assert main(["converge", str(write_config(tmp_path)), "--levels", "2"]) == 2


def test_mlf_prints_value(capsys):
    assert main(["mlf", "--beta", "1", "--x", "1"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(math.e, rel=1e-14)
    assert main(["mlf", "--beta", "0.5", "--mu", "0.5", "--x", "-2.5"]) == 0
    assert float(capsys.readouterr().out.split()[-1]) == pytest.approx(0.03717367339489733533,
                                                                      rel=1e-10)


def test_mlf_errors():
    assert main(["mlf", "--beta", "-1", "--x", "1"]) == 2
    assert main(["mlf", "--beta", "0.5", "--x", "1e4"]) == 3


def test_config_errors_exit_two(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.cfg")]) == 2
    bad = write_config(tmp_path, frac__alpha=1.5)
    assert main(["run", str(bad)]) == 2
    assert "frac.alpha" in capsys.readouterr().err
    assert main(["bogus"]) == 2


def test_selftest_negative_control_exit_one(tmp_path):
    assert main(["selftest", "--ml-max-terms", "3"]) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "fractimo", "mlf", "--beta", "1", "--x", "0"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and float(proc.stdout) == 1.0
