import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from fdsic import config
from fdsic.channel import SiChannel
from fdsic.cli import main
from fdsic.waveform import import_iq


@pytest.fixture
def small_ini(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text("[estimation]\nn_obs = 2000\n\n[sweep]\ntx_min_dbm = 0\ntx_max_dbm = 10\n"
                    "tx_step_db = 10\nrealizations = 1\n")
    return path


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_sweep_writes_csv(small_ini, tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    detail = tmp_path / "detail.csv"
    assert main(["sweep", "--config", str(small_ini), "--out", str(out), "--scenario", "b",
                 "--detail", str(detail), "--seed", "5"]) == 0
    rows = _rows(out)
    assert [r["tx_dbm"] for r in rows] == ["0.0", "10.0"]
    assert {r["scenario"] for r in rows} == {"b"}
    assert len(_rows(detail)) == 2
    assert "tx_dbm" in capsys.readouterr().out


def test_sweep_seed_flag_is_deterministic(small_ini, tmp_path):
    paths = [tmp_path / f"{i}.csv" for i in range(3)]
    for p, seed in zip(paths, ["3", "3", "4"]):
        main(["sweep", "--config", str(small_ini), "--out", str(p), "--seed", seed, "--realizations", "2"])
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert paths[0].read_bytes() != paths[2].read_bytes()


def test_budget_stdout(capsys):
    assert main(["budget"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split(",")[0] == "tx_dbm"
    assert len(lines) == 14


def test_single_exports(small_ini, tmp_path, capsys):
    ch, iq, est = tmp_path / "ch.json", tmp_path / "tx.iq", tmp_path / "est.json"
    assert main(["single", "--config", str(small_ini), "--tx-dbm", "15", "--scenario", "b",
                 "--save-channel", str(ch), "--save-iq", str(iq), "--save-estimates", str(est)]) == 0
    captured = capsys.readouterr()
    assert "vga_gain_b" in captured.err
    assert captured.out.splitlines()[0] == "scenario,tx_dbm,realization,sinr_db"
    assert SiChannel.load(ch).taps.shape[:2] == (2, 2)
    samples, rate = import_iq(iq)
    assert samples.shape[0] == 2 and rate == 64e6
    assert np.mean(np.abs(samples) ** 2) == pytest.approx(1.0, rel=0.1)
    data = json.loads(est.read_text())
    assert {"linear_channel", "nonlinear_coeffs"} <= set(data)


def test_config_hash(capsys):
    assert main(["config", "--hash-only"]) == 0
    assert capsys.readouterr().out.strip() == config.config_hash(config.SimConfig())


def test_config_dump_roundtrip(tmp_path):
    out = tmp_path / "c.ini"
    assert main(["config", "--seed", "9", "--out", str(out)]) == 0
    assert config.load(out).sweep.seed == 9


@pytest.mark.parametrize("text", ["[system]\nadc_bits = 0\n", "[system]\nbogus = 1\n", "not ini"])
def test_bad_config_exits_nonzero(tmp_path, text, capsys):
    path = tmp_path / "bad.ini"
    path.write_text(text)
    assert main(["budget", "--config", str(path)]) == 1
    assert "error" in capsys.readouterr().err


def test_lenient_accepts_unknown_key(tmp_path):
    path = tmp_path / "extra.ini"
    path.write_text("[system]\nbogus = 1\n")
    with pytest.warns(UserWarning):
        assert main(["budget", "--config", str(path), "--lenient", "--out", str(tmp_path / "b.csv")]) == 0


def test_missing_config_file(tmp_path):
    assert main(["budget", "--config", str(tmp_path / "nope.ini")]) == 1


@pytest.mark.parametrize("argv", [["sweep", "--scenario", "ab"], ["sweep", "--seed", "-1"],
                                  ["sweep", "--realizations", "0"], ["frobnicate"], []])
def test_bad_arguments(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fdsic", "config", "--hash-only"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert len(proc.stdout.strip()) == 16
