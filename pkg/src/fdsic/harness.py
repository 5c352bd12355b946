"""End-to-end experiments: SINR sweep, analytic budget and single debug runs.

Every realization draws one SI channel and one transmit frame long enough for
three consecutive segments of ``n_obs`` samples:

1. stage A, low transmit power, SOI muted: fit the linear SI channel;
2. stage B, operating power, SOI muted: freeze the AGC gain and fit the
   canceller;
3. payload, operating power, SOI active: cancel and measure SINR.

Random numbers come from ``SeedSequence([seed, tx_index, realization])``,
whose four children feed the channel, the transmit bits, the SOI bits and the
receiver noise. All scenarios of one (tx_index, realization) pair therefore
see the same channel and waveforms, and results do not depend on how jobs are
scheduled.
"""

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import SoiSource, apply_mimo_channel, generate_si_channel, received_si_power_dbm, rf_cancellation
from .estimation import LinearSIChannelEstimator, NonlinearSICanceller, measure_sinr
from .link_budget import component_power_sweep
from .rf_models import ReceiverChain
from .signal import amplitude_for_dbm, power_dbm
from .waveform import generate_frame

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Scenario:
    """Receiver-chain and canceller combination of one sweep curve."""

    name: str
    linear_chain: bool
    linear_cancellation: bool
    label: str = ""


SCENARIOS = {
    "a": Scenario("a", False, True, "nonlinear chain, linear cancellation"),
    "b": Scenario("b", False, False, "nonlinear chain, nonlinear cancellation"),
    "c": Scenario("c", True, False, "linear chain, nonlinear cancellation"),
}


class SimulationError(RuntimeError):
    """A realization failed; the message carries its indices and seed."""


def scenario_from_flags(flags):
    return Scenario("custom", flags.linear_chain, flags.linear_only_cancellation, "from config flags")


def parse_scenarios(text):
    """``"all"``, a single letter or a comma-separated list -> list of Scenario."""
    if isinstance(text, Scenario):
        return [text]
    if text is None or text == "all":
        return list(SCENARIOS.values())
    names = [s.strip() for s in str(text).split(",") if s.strip()]
    unknown = [n for n in names if n not in SCENARIOS]
    if unknown or not names:
        raise ValueError(f"unknown scenario {text!r}; choose from a, b, c or all")
    return [SCENARIOS[n] for n in names]


def realization_seeds(master_seed, tx_index, realization):
    """Channel, tx-bits, SOI-bits and noise seeds of one realization."""
    return np.random.SeedSequence([int(master_seed), int(tx_index), int(realization)]).spawn(4)


def training_power_dbm(cfg, tx_dbm, si_gain_db):
    """Stage-A transmit power.

    ``low_power_offset_db`` below the operating power, raised where needed so
    the SI stays ``min_training_snr_db`` above the noise floor, and never
    above the operating power. `si_gain_db` is SI power at the receiver input
    minus transmit power.
    """
    est = cfg.estimation
    needed = cfg.rx_chain().noise_floor_dbm + est.min_training_snr_db - si_gain_db
    return float(min(tx_dbm, max(tx_dbm - est.low_power_offset_db, needed)))


@dataclass
class RealizationResult:
    """Outcome of one realization of one scenario.

    ``powers`` holds per-stage levels in dBm (gains in dB) for debugging.
    """

    scenario: str
    tx_dbm: float
    realization: int
    sinr_db: float
    powers: dict = field(default_factory=dict)
    channel: object = None
    frame: object = None
    estimates: dict = field(default_factory=dict)


def _rx_input(cfg, frame, ch, tx_dbm, rx, soi=None):
    if not cfg.flags.si_enabled:
        base = np.zeros(len(frame), dtype=np.complex128)
        return base if soi is None else base + soi
    at_antenna = apply_mimo_channel(frame, ch, tx_dbm, soi)
    return rf_cancellation(at_antenna, frame, ch, tx_dbm)[rx]


def soi_gain(residual, soi):
    """Complex gain of the SOI inside `residual`, by projection.

    Gain compression scales the SOI and the noise alike, so the fitted gain,
    rather than the small-signal chain gain, is the fair SINR reference.
    """
    return complex(np.vdot(soi, residual) / np.vdot(soi, soi))


def run_realization(cfg, tx_dbm, scenario, seeds, realization=0, *, keep=False):
    """Simulate one realization of `scenario` at transmit power `tx_dbm`.

    Parameters
    ----------
    cfg : SimConfig
    tx_dbm : float
        Operating power per transmit antenna.
    scenario : Scenario
    seeds : sequence of 4 SeedSequence
        From :func:`realization_seeds`.
    keep : bool
        Attach the channel, frame and fitted estimators to the result.
    """
    sysp, est = cfg.system, cfg.estimation
    M, N = est.memory_len, est.n_obs
    rx = cfg.sweep.rx_index
    rxp = cfg.rx_chain()
    # spawn() mutates a SeedSequence, so work on fresh copies
    ch_seed, tx_seed, soi_seed, noise_seed = (
        np.random.SeedSequence(s.entropy, spawn_key=s.spawn_key, pool_size=s.pool_size) for s in seeds)

    ch = generate_si_channel(sysp.n_rx, sysp.n_tx, cfg.channel.true_len, sysp.antenna_separation_db, ch_seed,
                             rf_cancellation_db=sysp.rf_cancellation_db,
                             decay_db_per_tap=cfg.channel.decay_db_per_tap)
    frame = generate_frame(cfg.ofdm, cfg.ofdm.n_symbols_for(3 * N), sysp.n_tx, tx_seed)
    seg_a, seg_b, seg_p = (frame.segment(k * N, (k + 1) * N) for k in range(3))
    soi = SoiSource(sysp.received_signal_power_dbm, cfg.ofdm, soi_seed).samples(N)
    noise = np.random.default_rng(noise_seed)

    def chain():
        return ReceiverChain(rxp, linear=scenario.linear_chain, random_state=noise)

    si_gain_db = float(received_si_power_dbm(ch, 0.0)[rx])
    powers = {"tx": tx_dbm, "soi": power_dbm(soi), "noise_floor": rxp.noise_floor_dbm}
    estimates = {}

    if cfg.flags.si_enabled:
        tx_low = training_power_dbm(cfg, tx_dbm, si_gain_db)
        x_a = _rx_input(cfg, seg_a, ch, tx_low, rx)
        chain_a = chain().fit(x_a)
        y_a = chain_a.transform(x_a)
        lin_a = LinearSIChannelEstimator(M, N).fit(seg_a.samples.T * amplitude_for_dbm(tx_low), y_a)
        estimates["stage_a"] = lin_a
        powers.update({"train_tx": tx_low, "si_in_a": power_dbm(x_a), "vga_gain_a": chain_a.vga_gain_db_,
                       "adc_out_a": power_dbm(y_a)})

    x_b = _rx_input(cfg, seg_b, ch, tx_dbm, rx)
    x_p = _rx_input(cfg, seg_p, ch, tx_dbm, rx, soi)
    chain_b = chain().fit(x_b if cfg.flags.si_enabled else x_p)
    powers.update({"si_in_b": power_dbm(x_b), "vga_gain_b": chain_b.vga_gain_db_})
    X_b = seg_b.samples.T * amplitude_for_dbm(tx_dbm)
    X_p = seg_p.samples.T * amplitude_for_dbm(tx_dbm)

    y_b = chain_b.transform(x_b) if cfg.flags.si_enabled else None
    y_p = chain_b.transform(x_p)
    if cfg.flags.si_enabled:
        if scenario.linear_cancellation and est.linear_baseline == "reestimate":
            canceller = LinearSIChannelEstimator(M, N).fit(X_b, y_b)
        else:
            canceller = NonlinearSICanceller(lin_a, N, linear=scenario.linear_cancellation).fit(X_b, y_b)
        estimates["stage_b"] = canceller
        residual = canceller.cancel(X_p, y_p)
        powers.update({"adc_out_b": power_dbm(y_b), "cancellation_b": canceller.score(X_b, y_b)})
    else:
        residual = y_p

    gain = soi_gain(residual[M - 1:], soi[M - 1:])
    powers.update({"adc_out_payload": power_dbm(y_p),
                   "residual_payload": power_dbm(residual[M - 1:]) - 20.0 * np.log10(abs(chain_b.gain_)),
                   "soi_gain_error": 20.0 * np.log10(abs(gain / chain_b.gain_))})
    sinr = measure_sinr(residual[M - 1:], gain * soi[M - 1:])
    result = RealizationResult(scenario.name, float(tx_dbm), int(realization), sinr, powers)
    if keep:
        result.channel, result.frame, result.estimates = ch, frame, estimates
    return result


def _job(args):
    cfg, tx_index, tx_dbm, realization, scenarios = args
    seeds = realization_seeds(cfg.sweep.seed, tx_index, realization)
    out = []
    for sc in scenarios:
        try:
            out.append(run_realization(cfg, tx_dbm, sc, seeds, realization).sinr_db)
        except Exception as exc:
            raise SimulationError(
                f"scenario {sc.name}, tx {tx_dbm:g} dBm (index {tx_index}), realization {realization}, "
                f"seed {cfg.sweep.seed}: {type(exc).__name__}: {exc}") from exc
    return tx_index, realization, out


def average_sinr(sinr_db, averaging="db", axis=-1):
    """Mean SINR across realizations, in the dB or linear domain."""
    sinr_db = np.asarray(sinr_db, dtype=float)
    if averaging == "db":
        return sinr_db.mean(axis=axis)
    if averaging == "linear":
        return 10.0 * np.log10(np.mean(10.0 ** (sinr_db / 10.0), axis=axis))
    raise ValueError(f"averaging must be 'db' or 'linear', got {averaging!r}")


@dataclass
class SweepResult:
    """Per-realization SINR for every scenario and transmit power.

    Attributes
    ----------
    tx_dbm : ndarray, shape (n_tx_powers,)
    scenarios : list of Scenario
    sinr_db : ndarray, shape (n_scenarios, n_tx_powers, n_realizations)
    averaging : {"db", "linear"}
    """

    tx_dbm: np.ndarray
    scenarios: list
    sinr_db: np.ndarray
    averaging: str = "db"
    seed: int = 0

    def mean(self):
        return average_sinr(self.sinr_db, self.averaging)

    def curve(self, name):
        names = [s.name for s in self.scenarios]
        return self.mean()[names.index(name)]

    def to_csv(self, path=None):
        """One row per (scenario, tx power); returns the text."""
        mean = self.mean()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "tx_dbm", "sinr_db", "sinr_std_db", "sinr_min_db", "sinr_max_db", "realizations"])
        for i, sc in enumerate(self.scenarios):
            for k, tx in enumerate(self.tx_dbm):
                r = self.sinr_db[i, k]
                w.writerow([sc.name, repr(float(tx)), repr(float(mean[i, k])), repr(float(r.std())),
                            repr(float(r.min())), repr(float(r.max())), r.size])
        return _emit(buf.getvalue(), path)

    def detail_csv(self, path=None):
        """One row per realization, the inputs to :meth:`mean`."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "tx_index", "tx_dbm", "realization", "sinr_db"])
        for i, sc in enumerate(self.scenarios):
            for k, tx in enumerate(self.tx_dbm):
                for r, v in enumerate(self.sinr_db[i, k]):
                    w.writerow([sc.name, k, repr(float(tx)), r, repr(float(v))])
        return _emit(buf.getvalue(), path)

    def summary(self):
        """Plain-text table of the averaged curves."""
        mean = self.mean()
        head = "tx_dbm " + " ".join(f"{s.name:>8}" for s in self.scenarios)
        lines = [head]
        for k, tx in enumerate(self.tx_dbm):
            lines.append(f"{tx:6.1f} " + " ".join(f"{mean[i, k]:8.2f}" for i in range(len(self.scenarios))))
        return "\n".join(lines)


def _emit(text, path):
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def run_sweep(cfg, scenarios="all", *, realizations=None, tx_dbm=None, n_jobs=None):
    """SINR versus transmit power for each scenario.

    Parameters
    ----------
    cfg : SimConfig
    scenarios : str or list of Scenario
        ``"all"``, ``"a"``, ``"b,c"``... or Scenario objects.
    realizations, n_jobs : int, optional
        Override the sweep section of `cfg`.
    tx_dbm : array_like, optional
        Override the transmit powers.

    Raises
    ------
    SimulationError
        Wrapping the first failing realization with its indices and seed.
    """
    if isinstance(scenarios, (list, tuple)):
        scen = [s if isinstance(s, Scenario) else SCENARIOS[s] for s in scenarios]
    else:
        scen = parse_scenarios(scenarios)
    n_real = cfg.sweep.realizations if realizations is None else int(realizations)
    if n_real < 1:
        raise ValueError("realizations must be >= 1")
    n_jobs = cfg.sweep.n_jobs if n_jobs is None else int(n_jobs)
    tx = cfg.sweep.tx_powers() if tx_dbm is None else np.atleast_1d(np.asarray(tx_dbm, dtype=float))

    jobs = [(cfg, k, float(p), r, scen) for k, p in enumerate(tx) for r in range(n_real)]
    sinr = np.empty((len(scen), tx.size, n_real))
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = map(_job, jobs)
    for k, r, values in results:
        sinr[:, k, r] = values
        logger.debug("tx index %d realization %d: %s", k, r, values)
    return SweepResult(tx, scen, sinr, cfg.sweep.averaging, cfg.sweep.seed)


def run_link_budget(cfg, path=None):
    """Analytic budget sweep; writes CSV to `path` when given."""
    report = component_power_sweep(cfg)
    if path is not None:
        report.to_csv(path)
    return report


def run_single(cfg, tx_dbm, scenario="b", realization=0, tx_index=0):
    """One realization with its channel, frame and estimates attached."""
    sc = scenario if isinstance(scenario, Scenario) else parse_scenarios(scenario)[0]
    seeds = realization_seeds(cfg.sweep.seed, tx_index, realization)
    return run_realization(cfg, tx_dbm, sc, seeds, realization, keep=True)


def format_powers(result):
    """Per-stage power dump of a :class:`RealizationResult`."""
    units = {"vga_gain_a": "dB", "vga_gain_b": "dB", "cancellation_b": "dB", "soi_gain_error": "dB"}
    lines = [f"scenario {result.scenario}  tx {result.tx_dbm:g} dBm  realization {result.realization}"]
    for key, value in result.powers.items():
        lines.append(f"  {key:<18} {value:9.2f} {units.get(key, 'dBm')}")
    lines.append(f"  {'sinr':<18} {result.sinr_db:9.2f} dB")
    return "\n".join(lines)
