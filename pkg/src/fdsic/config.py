"""Simulation configuration: typed sections, INI load/save, validation.

The file format is plain INI (``[section]`` headers, ``key = value`` lines,
``#`` comments). Missing keys take their defaults, so an empty file yields
the reference configuration. See ``configs/default.ini`` for every key.
"""

import configparser
import dataclasses
import hashlib
import io
import warnings
from dataclasses import dataclass, field

import numpy as np

from .rf_models import RxChainParams, StageParams
from .waveform import OfdmParams


class ConfigError(ValueError):
    """Invalid configuration file or value."""


@dataclass(frozen=True)
class SystemParams:
    snr_requirement_db: float = 10.0
    bandwidth_hz: float = 12.5e6
    noise_figure_db: float = 4.1
    received_signal_power_dbm: float = -83.9
    antenna_separation_db: float = 40.0
    rf_cancellation_db: float = 20.0
    adc_bits: int = 12
    papr_db: float = 10.0
    pa_gain_db: float = 27.0
    n_tx: int = 2
    n_rx: int = 2


@dataclass(frozen=True)
class ReceiverParams:
    adc_full_scale_dbm: float = 20.0
    # added to system.papr_db to form the AGC backoff; 3 dB removes nearly all ADC clipping
    clip_headroom_db: float = 0.0
    noise_before_lna: bool = True


@dataclass(frozen=True)
class ChannelParams:
    true_len: int = 5
    decay_db_per_tap: float = 3.0


@dataclass(frozen=True)
class EstimationParams:
    memory_len: int = 5
    n_obs: int = 10000
    low_power_offset_db: float = 20.0
    min_training_snr_db: float = 15.0
    # "reestimate": the linear-only baseline refits an FIR at operating power;
    # "reuse": it keeps the low-power channel and fits only the linear term.
    linear_baseline: str = "reestimate"


@dataclass(frozen=True)
class SweepParams:
    tx_min_dbm: float = -5.0
    tx_max_dbm: float = 25.0
    tx_step_db: float = 2.5
    realizations: int = 20
    seed: int = 20140101
    averaging: str = "db"
    n_jobs: int = 1
    rx_index: int = 0

    def tx_powers(self):
        n = int(np.floor((self.tx_max_dbm - self.tx_min_dbm) / self.tx_step_db + 1e-9)) + 1
        return self.tx_min_dbm + self.tx_step_db * np.arange(n)


@dataclass(frozen=True)
class ScenarioFlags:
    linear_chain: bool = False
    linear_only_cancellation: bool = False
    si_enabled: bool = True


@dataclass(frozen=True)
class LinkBudgetParams:
    linear_si_margin_db: float = 3.0


def _lna():
    return StageParams(25.0, 43.0, -15.0, 4.1)


def _mixer():
    return StageParams(6.0, 42.0, 15.0, 4.0)


def _vga():
    return StageParams(0.0, 43.0, 10.0, 4.0, gain_min_db=0.0, gain_max_db=69.0)


@dataclass(frozen=True)
class SimConfig:
    system: SystemParams = field(default_factory=SystemParams)
    lna: StageParams = field(default_factory=_lna)
    mixer: StageParams = field(default_factory=_mixer)
    vga: StageParams = field(default_factory=_vga)
    receiver: ReceiverParams = field(default_factory=ReceiverParams)
    ofdm: OfdmParams = field(default_factory=OfdmParams)
    channel: ChannelParams = field(default_factory=ChannelParams)
    estimation: EstimationParams = field(default_factory=EstimationParams)
    sweep: SweepParams = field(default_factory=SweepParams)
    flags: ScenarioFlags = field(default_factory=ScenarioFlags)
    link_budget: LinkBudgetParams = field(default_factory=LinkBudgetParams)

    def __post_init__(self):
        _validate(self)

    def rx_chain(self):
        """Receiver-chain parameters assembled from the relevant sections."""
        return RxChainParams(
            lna=self.lna,
            mixer=self.mixer,
            vga=self.vga,
            noise_figure_db=self.system.noise_figure_db,
            bandwidth_hz=self.system.bandwidth_hz,
            adc_bits=self.system.adc_bits,
            adc_full_scale_dbm=self.receiver.adc_full_scale_dbm,
            backoff_db=self.system.papr_db + self.receiver.clip_headroom_db,
            noise_before_lna=self.receiver.noise_before_lna,
        )

    def replace(self, **sections):
        """Copy with whole sections or ``section__key`` values replaced."""
        updates = {}
        for name, value in sections.items():
            if "__" in name:
                sec, key = name.split("__", 1)
                base = updates.get(sec, getattr(self, sec))
                updates[sec] = dataclasses.replace(base, **{key: value})
            else:
                updates[name] = value
        return dataclasses.replace(self, **updates)


_STAGE_RANGES = {"gain_db": (-30.0, 100.0), "iip2_dbm": (-100.0, 100.0),
                 "iip3_dbm": (-100.0, 100.0), "nf_db": (0.0, 30.0),
                 "gain_min_db": (-30.0, 100.0), "gain_max_db": (-30.0, 100.0)}

RANGES = {
    "system": {
        "snr_requirement_db": (-20.0, 60.0), "bandwidth_hz": (1.0, 1e10),
        "noise_figure_db": (0.0, 30.0), "received_signal_power_dbm": (-200.0, 30.0),
        "antenna_separation_db": (0.0, 200.0), "rf_cancellation_db": (0.0, 200.0),
        "adc_bits": (1, 32), "papr_db": (0.0, 30.0), "pa_gain_db": (0.0, 100.0),
        "n_tx": (1, 16), "n_rx": (1, 16),
    },
    "lna": _STAGE_RANGES,
    "mixer": _STAGE_RANGES,
    "vga": _STAGE_RANGES,
    "receiver": {"adc_full_scale_dbm": (-100.0, 100.0), "clip_headroom_db": (0.0, 30.0)},
    "ofdm": {
        "constellation_order": (16, 16), "n_subcarriers": (2, 4096),
        "n_data_subcarriers": (1, 4096), "guard_fraction": (0.0, 0.99),
        "sample_period_s": (1e-12, 1e-3), "symbol_duration_s": (1e-9, 1.0),
        "oversampling": (1, 64), "window_len": (0, 4096),
    },
    "channel": {"true_len": (1, 1024), "decay_db_per_tap": (0.0, 100.0)},
    "estimation": {
        "memory_len": (1, 1024), "n_obs": (2, 10_000_000),
        "low_power_offset_db": (0.0, 100.0), "min_training_snr_db": (-50.0, 100.0),
    },
    "sweep": {
        "tx_min_dbm": (-100.0, 60.0), "tx_max_dbm": (-100.0, 60.0), "tx_step_db": (0.01, 100.0),
        "realizations": (1, 100_000), "seed": (0, 2**64 - 1), "n_jobs": (1, 1024),
        "rx_index": (0, 15),
    },
    "link_budget": {"linear_si_margin_db": (-50.0, 100.0)},
}

CHOICES = {
    ("estimation", "linear_baseline"): ("reestimate", "reuse"),
    ("sweep", "averaging"): ("db", "linear"),
}


def _section_fields(section):
    return {f.name: f for f in dataclasses.fields(section)}


def _validate(cfg):
    for sec_name, bounds in RANGES.items():
        section = getattr(cfg, sec_name)
        for key, (lo, hi) in bounds.items():
            value = getattr(section, key)
            if value is not None and not lo <= value <= hi:
                raise ConfigError(f"{sec_name}.{key} = {value!r} outside range [{lo}, {hi}]")
    for (sec_name, key), allowed in CHOICES.items():
        value = getattr(getattr(cfg, sec_name), key)
        if value not in allowed:
            raise ConfigError(f"{sec_name}.{key} = {value!r} not one of {allowed}")
    if cfg.sweep.tx_max_dbm < cfg.sweep.tx_min_dbm:
        raise ConfigError("sweep.tx_max_dbm must be >= sweep.tx_min_dbm")
    if cfg.estimation.memory_len > cfg.estimation.n_obs:
        raise ConfigError("estimation.memory_len must not exceed estimation.n_obs")
    if cfg.channel.true_len > cfg.estimation.memory_len:
        raise ConfigError("channel.true_len must not exceed estimation.memory_len")
    if cfg.sweep.rx_index >= cfg.system.n_rx:
        raise ConfigError("sweep.rx_index must be < system.n_rx")


def _parse_value(raw, default, where):
    raw = raw.strip()
    try:
        if default is None:
            return float(raw)
        if isinstance(default, bool):
            lowered = raw.lower()
            if lowered in configparser.ConfigParser.BOOLEAN_STATES:
                return configparser.ConfigParser.BOOLEAN_STATES[lowered]
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw, 0)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {type(default).__name__}") from None


def loads(text, *, strict=True, source="<string>"):
    """Parse configuration text; missing keys take their defaults."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    base = SimConfig()
    sections = {f.name: getattr(base, f.name) for f in dataclasses.fields(SimConfig)}
    updates = {}

    def complain(msg):
        if strict:
            raise ConfigError(f"{source}: {msg}")
        warnings.warn(f"{source}: {msg}", stacklevel=3)

    for sec_name in parser.sections():
        if sec_name not in sections:
            complain(f"unknown section [{sec_name}]")
            continue
        fields = _section_fields(sections[sec_name])
        values = {}
        for key, raw in parser.items(sec_name):
            if key not in fields:
                complain(f"unknown key {sec_name}.{key}")
                continue
            default = getattr(sections[sec_name], key)
            values[key] = _parse_value(raw, default, f"{source}: {sec_name}.{key}")
        if values:
            try:
                updates[sec_name] = dataclasses.replace(sections[sec_name], **values)
            except ConfigError:
                raise
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"{source}: [{sec_name}] {exc}") from exc
    return dataclasses.replace(base, **updates)


def load(path, *, strict=True):
    with open(path) as fh:
        return loads(fh.read(), strict=strict, source=str(path))


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dumps(cfg):
    """Render `cfg` as INI text covering every key."""
    buf = io.StringIO()
    for i, f in enumerate(dataclasses.fields(cfg)):
        section = getattr(cfg, f.name)
        if i:
            buf.write("\n")
        buf.write(f"[{f.name}]\n")
        for sf in dataclasses.fields(section):
            if getattr(section, sf.name) is None:
                continue
            buf.write(f"{sf.name} = {_format_value(getattr(section, sf.name))}\n")
    return buf.getvalue()


def save(cfg, path):
    with open(path, "w") as fh:
        fh.write(dumps(cfg))


def config_hash(cfg):
    """Short SHA-256 digest of the canonical rendering of `cfg`."""
    return hashlib.sha256(dumps(cfg).encode()).hexdigest()[:16]
