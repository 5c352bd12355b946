from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fdsic import config
from fdsic.config import ConfigError, SimConfig

ROOT = Path(__file__).resolve().parents[1]


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.ini"
    path.write_text("")
    assert config.load(path) == SimConfig()


def test_default_values():
    cfg = SimConfig()
    assert cfg.system.adc_bits == 12
    assert cfg.lna.iip3_dbm == -15.0
    assert cfg.vga.max_gain_db == 69.0
    assert len(cfg.sweep.tx_powers()) == 13
    assert cfg.rx_chain().backoff_db == cfg.system.papr_db


def test_partial_file_overrides_one_key():
    cfg = config.loads("[system]\nadc_bits = 14  # finer\n")
    assert cfg.system.adc_bits == 14
    assert cfg.replace(system__adc_bits=12) == SimConfig()


@pytest.mark.parametrize("text,key", [
    ("[system]\nadc_bits = 0\n", "system.adc_bits"),
    ("[sweep]\naveraging = median\n", "sweep.averaging"),
    ("[system]\nbandwidth_hz = wide\n", "system.bandwidth_hz"),
    ("[receiver]\nnoise_before_lna = maybe\n", "receiver.noise_before_lna"),
])
def test_bad_values_name_the_key(text, key):
    with pytest.raises(ConfigError, match=key.replace(".", r"\.")):
        config.loads(text)


def test_cross_field_checks():
    with pytest.raises(ConfigError, match="tx_max_dbm"):
        config.loads("[sweep]\ntx_min_dbm = 10\ntx_max_dbm = 0\n")
    with pytest.raises(ConfigError, match="true_len"):
        config.loads("[channel]\ntrue_len = 8\n")


def test_unknown_key_strict_and_lenient():
    text = "[system]\nadc_bitz = 14\n"
    with pytest.raises(ConfigError, match="adc_bitz"):
        config.loads(text)
    with pytest.warns(UserWarning, match="adc_bitz"):
        assert config.loads(text, strict=False) == SimConfig()
    with pytest.raises(ConfigError, match="nosuch"):
        config.loads("[nosuch]\na = 1\n")


def test_malformed_ini():
    with pytest.raises(ConfigError):
        config.loads("adc_bits = 12\n")


@given(st.integers(1, 24), st.floats(-20, 20, allow_nan=False), st.integers(0, 2**64 - 1),
       st.booleans(), st.sampled_from(["db", "linear"]))
def test_roundtrip(bits, iip3, seed, flag, avg):
    cfg = SimConfig().replace(system__adc_bits=bits, lna__iip3_dbm=iip3, sweep__seed=seed,
                              flags__linear_chain=flag, sweep__averaging=avg)
    back = config.loads(config.dumps(cfg))
    assert back == cfg
    assert config.config_hash(back) == config.config_hash(cfg)


def test_hash_stable_and_sensitive():
    h = config.config_hash(SimConfig())
    assert h == config.config_hash(SimConfig())
    assert len(h) == 16
    assert config.config_hash(SimConfig().replace(sweep__seed=1)) != h


def test_shipped_default_matches(tmp_path):
    shipped = config.load(ROOT / "configs" / "default.ini")
    assert shipped == SimConfig()
    header = (ROOT / "configs" / "default.ini").read_text().splitlines()[0]
    assert header == f"# config hash {config.config_hash(SimConfig())}"


def test_save_load(tmp_path):
    cfg = SimConfig().replace(estimation__n_obs=2000)
    config.save(cfg, tmp_path / "c.ini")
    assert config.load(tmp_path / "c.ini") == cfg
