import os

import pytest

from capwaves.cli import EXIT_INVALID, EXIT_OK, EXIT_TRIP, main
from capwaves.records import read_diagnostics, read_sweep

BASE = "[grid]\nn = 32\nnz = 8\n[integrator]\ndt = 0.05\nT_end = 0.5\n[output]\ninterval = 0.25\n"


@pytest.fixture
def ini(tmp_path):
    def write(extra=""):
        path = tmp_path / "run.ini"
        path.write_text(BASE + extra)
        return str(path)
    return write


def test_run_writes_records_and_echo(ini, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", ini(), "--out", str(out)]) == EXIT_OK
    recs = read_diagnostics(str(out / "diagnostics.jsonl"))
    assert [r.time for r in recs] == pytest.approx([0.0, 0.25, 0.5])
    echo = (out / "effective_config.ini").read_text()
    assert "[monitors]" in echo and "T_end = 0.5" in echo
    assert "completed" in capsys.readouterr().out


def test_set_override(ini, tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", ini(), "--out", str(out), "-q", "--set", "integrator.T_end=0.25"]) == EXIT_OK
    assert len(read_diagnostics(str(out / "diagnostics.jsonl"))) == 2


@pytest.mark.parametrize("extra, needle", [
    ("[dimensionless]\neps = 1.5\n", "eps"),
    ("[dimensionless]\nepsilon = 0.1\n", "epsilon"),
    ("[bathymetry]\npreset = file\nfile = gone.txt\n", "gone.txt"),
    ("[physical]\nH0 = 1\na_surf = 0.1\na_bott = 0.1\nLx = 6\nLy = 6\n[dimensionless]\neps = 0.1\n", "ambiguous"),
])
def test_invalid_input_exit_one(ini, tmp_path, capsys, extra, needle):
    assert main(["run", "--config", ini(extra), "--out", str(tmp_path)]) == EXIT_INVALID
    assert needle in capsys.readouterr().err


def test_missing_config_exit_one(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.ini")]) == EXIT_INVALID
    assert "nope.ini" in capsys.readouterr().err


def test_trip_exit_codes(ini, tmp_path):
    # a surface touching the flat bottom trips the height monitor at t = 0
    extra = "[dimensionless]\neps = 1.0\n[initial]\npreset = single-mode\namplitude = 1.0\n"
    assert main(["run", "--config", ini(extra), "--out", str(tmp_path), "-q"]) == EXIT_OK
    assert main(["run", "--config", ini(extra), "--out", str(tmp_path), "-q", "--strict"]) == EXIT_TRIP


def test_sweep_verb(ini, tmp_path):
    out = tmp_path / "s"
    args = ["sweep", "--config", ini("[sweep]\neps = 0.1, 0.2\nT_cap = 0.25\n"), "--out", str(out), "-q"]
    assert main(args) == EXIT_OK
    rows = read_sweep(str(out / "sweep.csv")).rows
    assert [r.eps for r in rows] == [0.1, 0.2] and all(r.censored for r in rows)
    assert main(args + ["--no-resume"]) == EXIT_OK
    assert read_sweep(str(out / "sweep.csv")).rows == rows


def test_existence_verb_validation(ini, tmp_path, capsys):
    assert main(["existence-time", "--config", ini(), "--out", str(tmp_path), "--eps", "0.1,0.2"]) == EXIT_INVALID
    assert "3" in capsys.readouterr().err
    assert main(["existence-time", "--config", ini(), "--out", str(tmp_path)]) == EXIT_INVALID


def test_existence_verb_censored(ini, tmp_path, capsys):
    cfg = ini("[initial]\npreset = rest\n[sweep]\nT_cap = 0.25\n")
    assert main(["existence-time", "--config", cfg, "--out", str(tmp_path), "--eps", "0.1,0.2,0.4"]) == EXIT_OK
    text = capsys.readouterr().out
    assert "censored" in text and "q not fitted" in text


def test_verify_verb(ini, tmp_path, capsys):
    cfg = ini("[dimensionless]\neps = 0.2\nbeta = 0.5\n[bathymetry]\npreset = cosine\n")
    assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) >= 7 and all(l.startswith("PASS") for l in lines)


def test_swlimit_verb(ini, tmp_path):
    cfg = ini("[dimensionless]\neps = 0.1\nbeta = 1.0\n[initial]\npreset = gaussian\n"
              "[bathymetry]\npreset = gaussian\n[swlimit]\nmu = 1e-2, 1e-3\nT = 0.2\ndt = 0.02\n")
    assert main(["sw-limit", "--config", cfg, "--out", str(tmp_path), "-q"]) == EXIT_OK
    text = (tmp_path / "swlimit.csv").read_text().splitlines()
    assert text[0].startswith("mu,") and len(text) == 3
    assert os.path.exists(tmp_path / "effective_config.ini")
