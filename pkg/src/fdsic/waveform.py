"""OFDM transmit waveform generation.

Numerology (WLAN-like, 4x oversampled):

* 64 subcarriers, 48 of them carrying 16-QAM data on bins +-1..+-24.
  DC is nulled and the remaining 15 bins form band-edge guards.
* The 64-bin spectrum is zero padded to a 256-point IDFT, so samples are
  15.625 ns apart (64 MS/s) and the subcarrier spacing is 250 kHz.
* The useful part of a symbol is 256 samples = 4 us. The cyclic prefix is
  25 % of that (64 samples), so one symbol occupies 320 samples = 5 us.
* Symbol edges are tapered with a raised-cosine ramp of ``window_len``
  samples that overlaps only the cyclic prefix of the following symbol, so
  the 256-sample FFT window is untouched and demodulation stays exact.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_samples, check_int

# Gray-coded level per bit pair (b_hi, b_lo) on one axis: 00->+1, 01->+3, 10->-1, 11->-3.
_AXIS_LEVELS = np.array([1.0, 3.0, -1.0, -3.0])
_QAM16_SCALE = 1.0 / np.sqrt(10.0)


@dataclass(frozen=True)
class OfdmParams:
    """OFDM numerology; defaults give a 12.5 MHz WLAN-style signal."""

    constellation_order: int = 16
    n_subcarriers: int = 64
    n_data_subcarriers: int = 48
    guard_fraction: float = 0.25
    sample_period_s: float = 15.625e-9
    symbol_duration_s: float = 4e-6
    oversampling: int = 4
    window_len: int = 16

    def __post_init__(self):
        if self.constellation_order != 16:
            raise ValueError("only 16-QAM is supported")
        check_int(self.n_subcarriers, "n_subcarriers", min_value=2)
        check_int(self.n_data_subcarriers, "n_data_subcarriers", min_value=1)
        check_int(self.oversampling, "oversampling", min_value=1)
        check_int(self.window_len, "window_len", min_value=0)
        if self.n_data_subcarriers > self.n_subcarriers - 1:
            raise ValueError("n_data_subcarriers must leave room for the DC null")
        if self.n_data_subcarriers % 2:
            raise ValueError("n_data_subcarriers must be even (symmetric around DC)")
        if not 0 <= self.guard_fraction < 1:
            raise ValueError("guard_fraction must be in [0, 1)")
        if not np.isclose(self.cp_len, self.guard_fraction * self.fft_len):
            raise ValueError("guard_fraction * fft_len must be an integer number of samples")
        if self.window_len > self.cp_len:
            raise ValueError("window_len must not exceed the cyclic prefix length")
        useful = self.fft_len * self.sample_period_s
        if not np.isclose(useful, self.symbol_duration_s, rtol=1e-9):
            raise ValueError(
                f"symbol_duration_s={self.symbol_duration_s} does not match the useful part "
                f"fft_len * sample_period_s = {useful}"
            )

    @property
    def fft_len(self):
        return self.n_subcarriers * self.oversampling

    @property
    def cp_len(self):
        return int(round(self.guard_fraction * self.fft_len))

    @property
    def symbol_len(self):
        return self.fft_len + self.cp_len

    @property
    def sample_rate_hz(self):
        return 1.0 / self.sample_period_s

    @property
    def subcarrier_spacing_hz(self):
        return self.sample_rate_hz / self.fft_len

    @property
    def data_bins(self):
        half = self.n_data_subcarriers // 2
        return np.r_[np.arange(-half, 0), np.arange(1, half + 1)]

    @property
    def occupied_bandwidth_hz(self):
        return (self.n_data_subcarriers + 1) * self.subcarrier_spacing_hz

    def n_symbols_for(self, n_samples):
        return -(-n_samples // self.symbol_len)


@dataclass(frozen=True)
class TxFrame:
    """Unit-power transmit streams and the QAM symbols they carry.

    Attributes
    ----------
    samples : ndarray, shape (n_tx, n_samples)
    symbols : ndarray, shape (n_tx, n_symbols, n_data_subcarriers)
    params : OfdmParams
    """

    samples: np.ndarray
    symbols: np.ndarray
    params: OfdmParams = field(default_factory=OfdmParams)

    @property
    def n_tx(self):
        return self.samples.shape[0]

    @property
    def sample_rate_hz(self):
        return self.params.sample_rate_hz

    def __len__(self):
        return self.samples.shape[1]

    def segment(self, start, stop):
        """Samples ``[start, stop)`` of every stream, as a new frame.

        The returned frame drops the symbol table because the segment need not
        align to symbol boundaries.
        """
        return TxFrame(self.samples[:, start:stop], np.empty((self.n_tx, 0, 0)), self.params)

    def scaled(self, tx_power_dbm):
        """Streams scaled so each carries `tx_power_dbm` on average."""
        return self.samples * np.sqrt(10.0 ** ((tx_power_dbm - 30.0) / 10.0))


def qam16_map(bits):
    """Gray-map bits to unit-energy 16-QAM symbols.

    Each group ``b0 b1 b2 b3`` maps to ``(I + jQ) / sqrt(10)`` with ``I`` set by
    ``(b0, b2)`` and ``Q`` by ``(b1, b3)`` using the per-axis Gray table
    ``00 -> +1, 01 -> +3, 10 -> -1, 11 -> -3``. So ``0000`` maps to
    ``(1 + 1j) / sqrt(10)``.
    """
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size % 4:
        raise ValueError(f"bit count must be a multiple of 4, got {bits.size}")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0 or 1")
    b = bits.reshape(-1, 4)
    i_level = _AXIS_LEVELS[2 * b[:, 0] + b[:, 2]]
    q_level = _AXIS_LEVELS[2 * b[:, 1] + b[:, 3]]
    return (i_level + 1j * q_level) * _QAM16_SCALE


def qam16_demap(symbols):
    """Hard-decision inverse of :func:`qam16_map`."""
    s = np.asarray(symbols, dtype=np.complex128).ravel() / _QAM16_SCALE

    def axis_bits(v):
        idx = np.argmin(np.abs(v[:, None] - _AXIS_LEVELS[None, :]), axis=1)
        return idx >> 1, idx & 1

    i_hi, i_lo = axis_bits(s.real)
    q_hi, q_lo = axis_bits(s.imag)
    return np.stack([i_hi, q_hi, i_lo, q_lo], axis=1).ravel()


def _raised_cosine_ramp(n):
    return 0.5 * (1.0 - np.cos(np.pi * (np.arange(n) + 0.5) / n))


def ofdm_modulate(symbols, params=OfdmParams()):
    """Modulate QAM symbols of shape ``(n_symbols, n_data_subcarriers)``.

    The IDFT is scaled so the output has unit mean power (taper included) when
    the symbols have unit mean energy.
    """
    symbols = np.atleast_2d(np.asarray(symbols, dtype=np.complex128))
    n_sym, n_data = symbols.shape
    if n_data != params.n_data_subcarriers:
        raise ValueError(f"expected {params.n_data_subcarriers} symbols per OFDM symbol, got {n_data}")
    nfft, cp, tr = params.fft_len, params.cp_len, params.window_len
    grid = np.zeros((n_sym, nfft), dtype=np.complex128)
    grid[:, params.data_bins % nfft] = symbols
    sym_len = params.symbol_len
    # overlapped ramps of independent symbols add w**2 + (1 - w)**2 < 1 in power
    ramp = _raised_cosine_ramp(tr)
    taper_power = (sym_len - tr + np.sum(ramp**2 + ramp[::-1] ** 2)) / sym_len
    useful = np.fft.ifft(grid, axis=1) * (nfft / np.sqrt(n_data * taper_power))

    out = np.zeros(n_sym * sym_len + tr, dtype=np.complex128)
    # prefix + useful part + cyclic suffix of tr samples for the taper
    ext = np.concatenate([useful[:, nfft - cp:], useful, useful[:, :tr]], axis=1)
    if tr:
        ext[:, :tr] *= ramp
        ext[:, -tr:] *= ramp[::-1]
    for k in range(n_sym):
        out[k * sym_len:k * sym_len + sym_len + tr] += ext[k]
    return out[:n_sym * sym_len]


def ofdm_demodulate(x, params=OfdmParams()):
    """Recover the data-subcarrier symbols from a sample-aligned OFDM stream."""
    x = as_samples(x)
    nfft, cp = params.fft_len, params.cp_len
    n_sym = x.size // params.symbol_len
    blocks = x[:n_sym * params.symbol_len].reshape(n_sym, params.symbol_len)[:, cp:cp + nfft]
    ramp = _raised_cosine_ramp(params.window_len)
    taper_power = (params.symbol_len - ramp.size + np.sum(ramp**2 + ramp[::-1] ** 2)) / params.symbol_len
    grid = np.fft.fft(blocks, axis=1) * (np.sqrt(params.n_data_subcarriers * taper_power) / nfft)
    return grid[:, params.data_bins % nfft]


def generate_frame(params, n_symbols, n_tx, seed):
    """Random 16-QAM OFDM frame, independent per transmit antenna.

    Each antenna draws its bits from its own child of
    ``numpy.random.SeedSequence(seed)``, so streams never share random
    substreams and identical seeds give bit-identical frames.
    """
    n_symbols = check_int(n_symbols, "n_symbols", min_value=1)
    n_tx = check_int(n_tx, "n_tx", min_value=1)
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    n_bits = 4 * n_symbols * params.n_data_subcarriers
    samples, symbols = [], []
    for child in seq.spawn(n_tx):
        bits = np.random.default_rng(child).integers(0, 2, n_bits)
        sym = qam16_map(bits).reshape(n_symbols, params.n_data_subcarriers)
        symbols.append(sym)
        samples.append(ofdm_modulate(sym, params))
    return TxFrame(np.array(samples), np.array(symbols), params)


def measure_papr(x):
    """Peak-to-average power ratio of `x` in dB."""
    x = as_samples(x, allow_empty=False)
    p = np.abs(x) ** 2
    mean = p.mean()
    if mean == 0:
        raise ValueError("PAPR undefined for an all-zero signal")
    return float(10.0 * np.log10(p.max() / mean))


def export_iq(path, frame):
    """Write `frame` as a text header line followed by interleaved float32 I/Q.

    The header is ``sample_rate_hz=<float> n_tx=<int> n_samples=<int>``; the
    payload stores antenna 0 first, each sample as ``I, Q`` little-endian
    float32.
    """
    samples = np.atleast_2d(np.asarray(frame.samples))
    n_tx, n = samples.shape
    header = f"sample_rate_hz={frame.sample_rate_hz!r} n_tx={n_tx} n_samples={n}\n"
    iq = np.empty((n_tx, n, 2), dtype="<f4")
    iq[..., 0] = samples.real
    iq[..., 1] = samples.imag
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(iq.tobytes())


def import_iq(path):
    """Read a file written by :func:`export_iq`.

    Returns
    -------
    samples : ndarray, shape (n_tx, n_samples), complex64
    sample_rate_hz : float
    """
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        meta = dict(item.split("=", 1) for item in header)
        n_tx, n = int(meta["n_tx"]), int(meta["n_samples"])
        raw = np.frombuffer(fh.read(), dtype="<f4")
    if raw.size != n_tx * n * 2:
        raise ValueError(f"{path}: expected {n_tx * n * 2} floats, found {raw.size}")
    iq = raw.reshape(n_tx, n, 2)
    return (iq[..., 0] + 1j * iq[..., 1]).astype(np.complex64), float(meta["sample_rate_hz"])


__all__ = [
    "OfdmParams",
    "TxFrame",
    "qam16_map",
    "qam16_demap",
    "ofdm_modulate",
    "ofdm_demodulate",
    "generate_frame",
    "measure_papr",
    "export_iq",
    "import_iq",
]
