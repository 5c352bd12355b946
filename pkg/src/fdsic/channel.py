"""Self-interference coupling channel, signal of interest and RF cancellation."""

import json
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_int
from .signal import amplitude_for_dbm, mean_power
from .waveform import OfdmParams, generate_frame


@dataclass(frozen=True)
class SiChannel:
    """MIMO SI coupling channel held constant over one realization.

    Attributes
    ----------
    taps : ndarray, shape (n_rx, n_tx, M)
        Antenna-coupling FIR per (receiver, transmitter) pair. Each pair has
        total energy ``10 ** (-isolation_db / 10)``.
    isolation_db : float
        Passive antenna separation.
    rf_cancellation_db : float
        Suppression achieved by the analog canceller.
    rf_residual : ndarray, shape (n_rx,)
        Complex factor left on the SI after RF cancellation at each receiver;
        ``|rf_residual| == 10 ** (-rf_cancellation_db / 20)``.
    """

    taps: np.ndarray
    isolation_db: float = 40.0
    rf_cancellation_db: float = 20.0
    rf_residual: np.ndarray = field(default=None)

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.complex128)
        if taps.ndim != 3:
            raise ValueError(f"taps must have shape (n_rx, n_tx, M), got {taps.shape}")
        object.__setattr__(self, "taps", taps)
        if self.rf_residual is None:
            residual = np.full(taps.shape[0], 10.0 ** (-self.rf_cancellation_db / 20.0), dtype=np.complex128)
        else:
            residual = np.asarray(self.rf_residual, dtype=np.complex128)
            if residual.shape != (taps.shape[0],):
                raise ValueError("rf_residual needs one entry per receiver")
        object.__setattr__(self, "rf_residual", residual)

    @property
    def n_rx(self):
        return self.taps.shape[0]

    @property
    def n_tx(self):
        return self.taps.shape[1]

    @property
    def memory_len(self):
        return self.taps.shape[2]

    def pair_energy_db(self):
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(np.sum(np.abs(self.taps) ** 2, axis=2))

    def effective_taps(self):
        """Taps seen at the receiver input after RF cancellation."""
        return self.taps * self.rf_residual[:, None, None]

    def to_dict(self):
        return {
            "isolation_db": self.isolation_db,
            "rf_cancellation_db": self.rf_cancellation_db,
            "rf_residual": [[z.real, z.imag] for z in self.rf_residual],
            "taps": [
                [[[z.real, z.imag] for z in pair] for pair in row] for row in self.taps
            ],
        }

    @classmethod
    def from_dict(cls, data):
        taps = np.array(data["taps"], dtype=float)
        residual = np.array(data["rf_residual"], dtype=float)
        return cls(
            taps=taps[..., 0] + 1j * taps[..., 1],
            isolation_db=float(data["isolation_db"]),
            rf_cancellation_db=float(data["rf_cancellation_db"]),
            rf_residual=residual[:, 0] + 1j * residual[:, 1],
        )

    def save(self, path):
        """Write the channel as JSON with complex values as ``[re, im]`` pairs."""
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class SoiSource:
    """Far-end OFDM signal of interest at a fixed received power."""

    power_dbm: float = -83.9
    params: OfdmParams = field(default_factory=OfdmParams)
    seed: object = 0

    def samples(self, n_samples):
        """`n_samples` of the SOI, normalized to exactly `power_dbm`."""
        n_samples = check_int(n_samples, "n_samples", min_value=1)
        n_sym = self.params.n_symbols_for(n_samples)
        x = generate_frame(self.params, n_sym, 1, self.seed).samples[0, :n_samples]
        return x * (amplitude_for_dbm(self.power_dbm) / np.sqrt(mean_power(x)))


def generate_si_channel(n_rx, n_tx, memory_len, isolation_db=40.0, seed=None, *,
                        rf_cancellation_db=20.0, decay_db_per_tap=3.0):
    """Draw a random SI coupling channel.

    Taps are circular complex Gaussian with a power profile falling
    `decay_db_per_tap` per tap, then each pair is normalized to total energy
    ``-isolation_db``. The RF-cancellation residual gets a random phase per
    receiver.
    """
    n_rx = check_int(n_rx, "n_rx", min_value=1)
    n_tx = check_int(n_tx, "n_tx", min_value=1)
    memory_len = check_int(memory_len, "memory_len", min_value=1)
    rng = np.random.default_rng(seed)
    profile = 10.0 ** (-decay_db_per_tap * np.arange(memory_len) / 10.0)
    shape = (n_rx, n_tx, memory_len)
    taps = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(profile / 2.0)
    energy = np.sum(np.abs(taps) ** 2, axis=2, keepdims=True)
    taps *= np.sqrt(10.0 ** (-isolation_db / 10.0) / energy)
    phase = rng.uniform(0.0, 2.0 * np.pi, n_rx)
    residual = 10.0 ** (-rf_cancellation_db / 20.0) * np.exp(1j * phase)
    return SiChannel(taps, float(isolation_db), float(rf_cancellation_db), residual)


def _tx_streams(frame, tx_power_dbm):
    samples = np.atleast_2d(np.asarray(getattr(frame, "samples", frame), dtype=np.complex128))
    return samples * amplitude_for_dbm(tx_power_dbm)


def _convolve_streams(taps, streams):
    """``sum_j taps[j] * streams[j]`` truncated to the stream length (zero state)."""
    n = streams.shape[1]
    out = np.zeros(n, dtype=np.complex128)
    for h, x in zip(taps, streams):
        out += np.convolve(x, h)[:n]
    return out


def apply_mimo_channel(frame, ch, tx_power_dbm, soi=None):
    """Signals at every receiver antenna, before RF cancellation.

    Parameters
    ----------
    frame : TxFrame or array_like, shape (n_tx, n_samples)
        Unit-power transmit streams.
    ch : SiChannel
    tx_power_dbm : float
        Power of each transmit stream at its antenna.
    soi : array_like, shape (n_samples,) or (n_rx, n_samples), optional
        Signal of interest added at every receiver.

    Returns
    -------
    ndarray, shape (n_rx, n_samples)
    """
    x = _tx_streams(frame, tx_power_dbm)
    if x.shape[0] != ch.n_tx:
        raise ValueError(f"frame has {x.shape[0]} transmit streams, channel expects {ch.n_tx}")
    rx = np.stack([_convolve_streams(ch.taps[i], x) for i in range(ch.n_rx)])
    if soi is not None:
        soi = np.asarray(soi, dtype=np.complex128)
        if soi.shape[-1] != x.shape[1]:
            raise ValueError(f"soi has {soi.shape[-1]} samples, frame has {x.shape[1]}")
        rx = rx + soi
    return rx


def rf_cancellation(rx_in, frame, ch, tx_power_dbm):
    """Subtract the analog SI replica at every receiver input.

    The replica is built from the true taps scaled by ``1 - rf_residual``, so
    the SI that survives is exactly ``rf_residual`` times the incoming SI
    while anything uncorrelated with the transmit streams passes unchanged.
    """
    rx_in = np.atleast_2d(np.asarray(rx_in, dtype=np.complex128))
    if rx_in.shape[0] != ch.n_rx:
        raise ValueError(f"rx_in has {rx_in.shape[0]} receivers, channel has {ch.n_rx}")
    x = _tx_streams(frame, tx_power_dbm)
    if x.shape[0] != ch.n_tx or x.shape[1] != rx_in.shape[1]:
        raise ValueError("frame dimensions do not match rx_in and channel")
    replica = np.stack([
        (1.0 - ch.rf_residual[i]) * _convolve_streams(ch.taps[i], x) for i in range(ch.n_rx)
    ])
    return rx_in - replica


def received_si_power_dbm(ch, tx_power_dbm, *, after_rf=True):
    """Expected SI power per receiver for independent unit-power streams."""
    energy = np.sum(np.abs(ch.taps) ** 2, axis=(1, 2))
    if after_rf:
        energy = energy * np.abs(ch.rf_residual) ** 2
    with np.errstate(divide="ignore"):
        return tx_power_dbm + 10.0 * np.log10(energy)


__all__ = [
    "SiChannel",
    "SoiSource",
    "generate_si_channel",
    "apply_mimo_channel",
    "rf_cancellation",
    "received_si_power_dbm",
]
