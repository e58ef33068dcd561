import os

import numpy as np
import pytest

from nsch import checkpoint as ck
from nsch.cli import (
    EXIT_CHECKPOINT,
    EXIT_IO,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_USAGE,
    main,
)
from nsch.config import load_config
from nsch.report import COLUMNS, read_csv

SMALL = """\
n_grid = 16
p = 2.8
delta = 0.1
rho_star = 2.0
nu_star = 0.5
nu_upper = 1.5
t_end = 2e-3
dt = 1e-4
cadence = 5
"""


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(SMALL)
    return path


def _run(cfg, out, *extra):
    return main(["run", "--config", str(cfg), "--out", str(out), *extra])


def test_run_writes_outputs(tmp_path, cfg, capsys):
    out = tmp_path / "out"
    assert _run(cfg, out, "--checkpoint-every", "10") == EXIT_OK
    files = sorted(os.listdir(out))
    assert files == ["config.txt", "diagnostics.csv", "final.nsch",
                     "step_0000010.nsch", "step_0000020.nsch"]
    rows = read_csv(out / "diagnostics.csv")
    assert [int(r["step"]) for r in rows] == [0, 5, 10, 15, 20]
    assert list(rows[0]) == list(COLUMNS)
    assert rows[-1]["t"] == pytest.approx(2e-3)
    assert load_config(out / "config.txt").out_dir == str(out)
    assert "20 steps" in capsys.readouterr().out


def test_run_is_deterministic(tmp_path, cfg):
    _run(cfg, tmp_path / "a")
    _run(cfg, tmp_path / "b")
    assert (tmp_path / "a" / "diagnostics.csv").read_bytes() == \
        (tmp_path / "b" / "diagnostics.csv").read_bytes()


def test_resume_continues_to_the_same_state(tmp_path, cfg):
    _run(cfg, tmp_path / "full", "--checkpoint-every", "10")
    resumed = tmp_path / "resumed"
    assert _run(cfg, resumed, "--resume", str(tmp_path / "full" / "step_0000010.nsch")) == EXIT_OK
    a, _ = ck.read_checkpoint(tmp_path / "full" / "final.nsch")
    b, _ = ck.read_checkpoint(resumed / "final.nsch")
    assert a.t == pytest.approx(b.t)
    assert np.allclose(a.b, b.b, rtol=0, atol=1e-13)


def test_corrupt_checkpoint_exit_code(tmp_path, cfg):
    _run(cfg, tmp_path / "o")
    bad = tmp_path / "bad.nsch"
    bad.write_bytes((tmp_path / "o" / "final.nsch").read_bytes()[:-20])
    assert _run(cfg, tmp_path / "r", "--resume", str(bad)) == EXIT_CHECKPOINT
    assert main(["pressure", str(bad)]) == EXIT_CHECKPOINT


def test_usage_and_io_exit_codes(tmp_path, monkeypatch):
    bad = tmp_path / "bad.cfg"
    bad.write_text("p = 0.5\n")
    assert main(["run", "--config", str(bad)]) == EXIT_USAGE
    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == EXIT_IO
    monkeypatch.setenv("NSCH_THREADS", "x")
    assert main(["plotdata", str(tmp_path / "nothing.csv")]) == EXIT_USAGE


def test_blowup_exit_code(tmp_path):
    path = tmp_path / "hot.cfg"
    path.write_text(SMALL.replace("dt = 1e-4", "dt = 0.5").replace("t_end = 2e-3", "t_end = 100"))
    with np.errstate(all="ignore"):
        assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == EXIT_NUMERIC


def test_pressure_and_plotdata(tmp_path, cfg, capsys):
    out = tmp_path / "o"
    _run(cfg, out)
    capsys.readouterr()
    npy = tmp_path / "p.npy"
    assert main(["pressure", str(out / "final.nsch"), "-o", str(npy)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "Helmholtz residual" in text
    assert np.load(npy).shape == (16, 16)
    assert main(["plotdata", str(out / "diagnostics.csv"), "--columns", "t,E_total"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split() == ["#", "t", "E_total"] and len(lines) == 6
    assert main(["plotdata", str(out / "diagnostics.csv"), "--columns", "nope"]) == EXIT_USAGE


def test_oracle_command(capsys):
    assert main(["oracle", "--m", "1"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "m_cut=1" in out and "observed local orders" in out


def test_verify_quick(capsys):
    assert main(["verify", "--quick", "--steps", "5"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" not in out
