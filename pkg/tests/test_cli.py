import json
import subprocess
import sys
from pathlib import Path

import pytest

from shadowspec.cli import main
from shadowspec.corrfuncs import CorrelationModel, upd_delta

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL = """
[placement]
kind = hex
kappa = 5
C = 3

[propagation]
K = 4000
beta = 3.6

[shadowing]
sigma_db = 10

[correlation]
kind = exponential
scale = 0.2

[experiment]
thresholds = 1e9 1e10
n_reps = 50
seed = 7
"""


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL)
    return path


def test_upd_matches_library(capsys):
    assert main(["upd", "--model", "exponential", "--scale", "0.2", "--eps", "0.1"]) == 0
    got = float(capsys.readouterr().out)
    assert got == upd_delta(CorrelationModel.exponential(0.2), 0.1)


def test_upd_unsupported_model():
    assert main(["upd", "--model", "wendland", "--eps", "0.1"]) == 2


def test_ospa_identical(tmp_path, capsys):
    a = tmp_path / "a.pts"
    a.write_text("0.1\n0.5\n3.0\n")
    assert main(["ospa", str(a), str(a), "--t", "1"]) == 0
    assert capsys.readouterr().out.strip() == "0.0"


def test_ospa_restricts_to_window(tmp_path, capsys):
    a, b = tmp_path / "a.pts", tmp_path / "b.pts"
    a.write_text("0.2\n")
    b.write_text("0.2\n5.0\n")
    assert main(["ospa", str(a), str(b), "--t", "1"]) == 0
    assert float(capsys.readouterr().out) == 0.0


def test_ospa_negative_values(tmp_path):
    a = tmp_path / "a.pts"
    a.write_text("-0.2\n")
    assert main(["ospa", str(a), str(a), "--t", "1"]) == 2


def test_missing_config():
    assert main(["simulate", "missing.cfg"]) == 1


def test_unknown_flag(capsys):
    assert main(["simulate", "x.ini", "--bogus"]) == 1
    assert "usage" in capsys.readouterr().err


def test_bad_config_names_field(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text(SMALL.replace("kappa = 5", "kappa = -1"))
    assert main(["simulate", str(path)]) == 1
    assert "placement.kappa" in capsys.readouterr().err


def test_bounds_invalid_exit(tmp_path):
    out = tmp_path / "hc"
    assert main(["bounds", str(CONFIGS / "hardcore_matern.ini"), "--out", str(out)]) == 2
    assert Path(f"{out}.txt").exists()


def test_bounds_sweep(tmp_path, capsys):
    out = tmp_path / "grid"
    assert main(["bounds", str(CONFIGS / "grid_bounds.ini"), "--sigma-sweep", "8:40:3", "--out", str(out)]) == 0
    data = json.loads(Path(f"{out}.json").read_text())
    assert len(data) == 3


def test_simulate_then_ppdata(small_cfg, tmp_path, capsys):
    prefix = tmp_path / "run"
    assert main(["simulate", str(small_cfg), "--out", str(prefix), "--workers", "2"]) == 0
    assert "wrote" in capsys.readouterr().out
    csv_path = Path(f"{prefix}.csv")
    assert len(csv_path.read_text().splitlines()) == 1 + 50 * 2
    summary = json.loads(Path(f"{prefix}.json").read_text())
    assert summary["meta"]["n_reps"] == 50

    assert main(["ppdata", str(csv_path), "--t", "1e10", "--mean", "0.18"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "k,ecdf,pcdf"
    assert float(lines[-1].split(",")[1]) == 1.0

    assert main(["ppdata", str(csv_path), "--t", "5e10"]) == 1


def test_simulate_seed_override(small_cfg, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["simulate", str(small_cfg), "--out", str(a), "--seed", "3", "--n-reps", "20"])
    main(["simulate", str(small_cfg), "--out", str(b), "--seed", "3", "--n-reps", "20", "--workers", "3"])
    assert Path(f"{a}.csv").read_bytes() == Path(f"{b}.csv").read_bytes()


def test_meanmeasure(small_cfg, capsys):
    assert main(["meanmeasure", str(small_cfg), "--t", "1e10"]) == 0
    out = capsys.readouterr().out.split("\n")
    assert out[0].startswith("L ") and out[1].startswith("M_det ")
    assert main(["meanmeasure", str(CONFIGS / "poisson_nugget.ini"), "--t", "1e11"]) == 0
    assert "M_disc" in capsys.readouterr().out


def test_console_script_version():
    proc = subprocess.run([sys.executable, "-m", "shadowspec.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "0.1.0" in proc.stdout
