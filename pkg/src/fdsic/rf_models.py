"""Baseband-equivalent receiver chain: LNA, IQ mixer + VGA, noise, AGC, ADC.

The LNA is a memoryless cubic ``k_lna*x + alpha*|x|**2*x``. The mixer and
VGA are lumped into one stage ``k_bb*y + beta*|y|**2 + gamma*conj(y)**3``.

Intercept points are converted to coefficients by matching the two-tone
response of these complex-baseband polynomials under the package power
convention (a tone of amplitude ``A`` carries ``A**2`` W):

* direct cubic: IM3 at ``2*f1 - f2`` has amplitude ``|alpha|*A**3`` against
  a fundamental of ``k*A``, so ``|alpha| = k / P_iip3``.
* square law: the difference tone has amplitude ``|beta|*A**2``, so
  ``|beta| = k / sqrt(P_iip2)``.
* conjugate cubic: the strongest mixed product (``-(2*f1 + f2)``) has
  amplitude ``3*|gamma|*A**3``, so ``|gamma| = k / (3*P_iip3)``. This is also
  the conjugate share of a per-branch real cubic with the same IIP3.

Intercepts are in dBm at the stage input; ``P`` above is in watts.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_samples
from .signal import dbm_to_watts, mean_power, power_dbm

BOLTZMANN_DBM_HZ = -174.0


@dataclass(frozen=True)
class StageParams:
    """Gain, intercepts and noise figure of one receiver stage.

    A variable-gain stage sets ``gain_min_db``/``gain_max_db``; ``gain_db`` is
    then its nominal setting. Fixed-gain stages leave both as None.
    """

    gain_db: float
    iip2_dbm: float
    iip3_dbm: float
    nf_db: float
    gain_min_db: float = None
    gain_max_db: float = None

    def __post_init__(self):
        if not self.min_gain_db <= self.gain_db <= self.max_gain_db:
            raise ValueError(f"gain_db={self.gain_db} outside [{self.min_gain_db}, {self.max_gain_db}]")
        if np.isnan(self.iip2_dbm) or np.isnan(self.iip3_dbm):
            raise ValueError("intercept points must not be NaN")
        if self.nf_db < 0:
            raise ValueError("nf_db must be non-negative")

    @property
    def min_gain_db(self):
        return self.gain_db if self.gain_min_db is None else self.gain_min_db

    @property
    def max_gain_db(self):
        return self.gain_db if self.gain_max_db is None else self.gain_max_db


def _default_lna():
    return StageParams(gain_db=25.0, iip2_dbm=43.0, iip3_dbm=-15.0, nf_db=4.1)


def _default_mixer():
    return StageParams(gain_db=6.0, iip2_dbm=42.0, iip3_dbm=15.0, nf_db=4.0)


def _default_vga():
    return StageParams(gain_db=0.0, iip2_dbm=43.0, iip3_dbm=10.0, nf_db=4.0,
                       gain_min_db=0.0, gain_max_db=69.0)


@dataclass(frozen=True)
class RxChainParams:
    """Receiver chain configuration.

    ``adc_full_scale_dbm`` is the power of a complex tone whose I and Q
    peaks sit exactly at the converter rails. With the default of 20 dBm a
    sensitivity-level input drives the VGA to the top of its range, where
    quantization noise is still more than 50 dB below thermal noise.

    ``backoff_db`` is the AGC target below full scale, by default the 10 dB
    PAPR budget. OFDM peaks beyond it clip at the I/Q rails now and then.
    """

    lna: StageParams = field(default_factory=_default_lna)
    mixer: StageParams = field(default_factory=_default_mixer)
    vga: StageParams = field(default_factory=_default_vga)
    noise_figure_db: float = 4.1
    bandwidth_hz: float = 12.5e6
    adc_bits: int = 12
    adc_full_scale_dbm: float = 20.0
    backoff_db: float = 10.0
    noise_before_lna: bool = True

    @property
    def stages(self):
        return (self.lna, self.mixer, self.vga)

    @property
    def noise_floor_dbm(self):
        return BOLTZMANN_DBM_HZ + 10.0 * np.log10(self.bandwidth_hz) + self.noise_figure_db

    @property
    def adc_full_scale(self):
        """Per-rail peak amplitude of the ADC."""
        return float(np.sqrt(dbm_to_watts(self.adc_full_scale_dbm)))


@dataclass(frozen=True)
class PolyCoeffs:
    """Polynomial coefficients of the LNA and the lumped mixer/VGA stage."""

    k_lna: complex
    alpha: complex
    k_bb: complex
    beta: complex
    gamma: complex

    @property
    def linear_gain(self):
        return self.k_lna * self.k_bb

    def linearized(self):
        return replace(self, alpha=0.0, beta=0.0, gamma=0.0)


def _amplitude_gain(gain_db):
    return 10.0 ** (gain_db / 20.0)


def cubic_coeff(k, iip3_dbm):
    """Compressive direct-cubic coefficient for voltage gain `k`."""
    if np.isposinf(iip3_dbm):
        return 0.0
    return -k / dbm_to_watts(iip3_dbm)


def square_coeff(k, iip2_dbm):
    if np.isposinf(iip2_dbm):
        return 0.0
    return k / np.sqrt(dbm_to_watts(iip2_dbm))


def conj_cubic_coeff(k, iip3_dbm):
    if np.isposinf(iip3_dbm):
        return 0.0
    return k / (3.0 * dbm_to_watts(iip3_dbm))


def baseband_intercepts(mixer, vga):
    """IIP2 and IIP3 (dBm at the mixer input) of the lumped mixer/VGA stage.

    Second-order terms add in amplitude (``1/sqrt(IIP2)``) and third-order
    terms in ``1/IIP3``, with the VGA intercepts referred back through the
    mixer gain. The result does not depend on the VGA gain setting.
    """
    g_mix = 10.0 ** (mixer.gain_db / 10.0)
    inv_sqrt_iip2 = 0.0
    inv_iip3 = 0.0
    for iip2, iip3, referral in ((mixer.iip2_dbm, mixer.iip3_dbm, 1.0),
                                 (vga.iip2_dbm, vga.iip3_dbm, g_mix)):
        if not np.isposinf(iip2):
            inv_sqrt_iip2 += np.sqrt(referral / dbm_to_watts(iip2))
        if not np.isposinf(iip3):
            inv_iip3 += referral / dbm_to_watts(iip3)
    with np.errstate(divide="ignore"):
        iip2 = 10.0 * np.log10(1.0 / inv_sqrt_iip2**2) + 30.0 if inv_sqrt_iip2 else np.inf
        iip3 = 10.0 * np.log10(1.0 / inv_iip3) + 30.0 if inv_iip3 else np.inf
    return float(iip2), float(iip3)


def stage_coeffs(stage, *, baseband):
    """Coefficients of `stage` on its own, at its nominal gain.

    ``baseband=False`` gives the LNA form (``k_lna``, ``alpha``); otherwise the
    mixer/VGA form (``k_bb``, ``beta``, ``gamma``). The other stage is an
    ideal unit-gain pass-through.
    """
    k = _amplitude_gain(stage.gain_db)
    if baseband:
        return PolyCoeffs(1.0, 0.0, k, square_coeff(k, stage.iip2_dbm), conj_cubic_coeff(k, stage.iip3_dbm))
    return PolyCoeffs(k, cubic_coeff(k, stage.iip3_dbm), 1.0, 0.0, 0.0)


def coeffs_from_intercepts(p, vga_gain_db=None, *, linear=False):
    """Polynomial coefficients for chain `p` at the given VGA gain.

    ``alpha`` is real negative, ``beta`` and ``gamma`` real positive. With
    ``linear=True`` all nonlinear coefficients are zero.
    """
    if vga_gain_db is None:
        vga_gain_db = p.vga.gain_db
    k_lna = _amplitude_gain(p.lna.gain_db)
    k_bb = _amplitude_gain(p.mixer.gain_db + vga_gain_db)
    iip2_bb, iip3_bb = baseband_intercepts(p.mixer, p.vga)
    coeffs = PolyCoeffs(
        k_lna=k_lna,
        alpha=cubic_coeff(k_lna, p.lna.iip3_dbm),
        k_bb=k_bb,
        beta=square_coeff(k_bb, iip2_bb),
        gamma=conj_cubic_coeff(k_bb, iip3_bb),
    )
    return coeffs.linearized() if linear else coeffs


def apply_lna(x, c):
    x = as_samples(x)
    return c.k_lna * x + c.alpha * np.abs(x) ** 2 * x


def apply_bb_chain(y_rf, c):
    y_rf = as_samples(y_rf)
    return c.k_bb * y_rf + c.beta * np.abs(y_rf) ** 2 + c.gamma * np.conj(y_rf) ** 3


def thermal_noise_dbm(nf_db, bandwidth_hz):
    if bandwidth_hz <= 0:
        raise ValueError(f"bandwidth_hz must be positive, got {bandwidth_hz}")
    return BOLTZMANN_DBM_HZ + 10.0 * np.log10(bandwidth_hz) + nf_db


def add_thermal_noise(x, nf_db, bandwidth_hz, gain_so_far_db=0.0, seed=None):
    """Add circular Gaussian noise of power ``kTB*F`` scaled by the gain so far.

    The whole noise power falls inside the simulated band, i.e. the signal is
    assumed to have passed an ideal channel-select filter of width
    `bandwidth_hz`.
    """
    x = as_samples(x)
    p = dbm_to_watts(thermal_noise_dbm(nf_db, bandwidth_hz) + gain_so_far_db)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size)
    return x + np.sqrt(p / 2.0) * noise


def agc_select_gain(x, p):
    """VGA gain (dB) that puts `x` plus the PAPR backoff at ADC full scale.

    `x` is the signal at the VGA input. The result is clamped to the VGA range.
    """
    level = power_dbm(as_samples(x, allow_empty=False))
    gain = p.adc_full_scale_dbm - p.backoff_db - level
    return float(np.clip(gain, p.vga.min_gain_db, p.vga.max_gain_db))


def adc_quantize(x, bits, full_scale):
    """Uniform mid-rise quantizer applied to I and Q separately.

    `full_scale` is the per-rail peak amplitude; inputs beyond it clip to the
    outermost level.
    """
    if bits < 1:
        raise ValueError(f"bits must be >= 1, got {bits}")
    x = as_samples(x)
    step = 2.0 * full_scale / 2.0 ** bits
    top = full_scale - step / 2.0

    def q(v):
        return np.clip(step * (np.floor(v / step) + 0.5), -top, top)

    return q(x.real) + 1j * q(x.imag)


def select_vga_gain(x, p):
    """AGC decision for chain input `x` (before noise and LNA).

    The VGA-input level is predicted from the small-signal gains plus the
    expected thermal noise, so the decision draws no random numbers and is the
    same for a linear and a nonlinear chain.
    """
    x = as_samples(x, allow_empty=False)
    noise_w = dbm_to_watts(p.noise_floor_dbm)
    level = 10.0 * np.log10(mean_power(x) + noise_w) + 30.0 + p.lna.gain_db + p.mixer.gain_db
    gain = p.adc_full_scale_dbm - p.backoff_db - level
    return float(np.clip(gain, p.vga.min_gain_db, p.vga.max_gain_db))


def run_rx_chain(x, p, seed=None, *, vga_gain_db=None, linear=False):
    """Pass the receiver-input signal `x` through the whole chain.

    Order: thermal noise (input referred, or at the LNA output when
    ``p.noise_before_lna`` is False), LNA, mixer/VGA, ADC. The VGA gain is
    chosen by the AGC unless `vga_gain_db` freezes it.

    Returns
    -------
    ndarray
        Digital baseband samples.
    """
    x = as_samples(x)
    if vga_gain_db is None:
        vga_gain_db = select_vga_gain(x, p)
    c = coeffs_from_intercepts(p, vga_gain_db, linear=linear)
    rng = np.random.default_rng(seed)
    if p.noise_before_lna:
        x = add_thermal_noise(x, p.noise_figure_db, p.bandwidth_hz, 0.0, rng)
    y_rf = apply_lna(x, c)
    if not p.noise_before_lna:
        y_rf = add_thermal_noise(y_rf, p.noise_figure_db, p.bandwidth_hz, p.lna.gain_db, rng)
    y = apply_bb_chain(y_rf, c)
    return adc_quantize(y, p.adc_bits, p.adc_full_scale)


def distortion_term_powers(x, p, vga_gain_db=None, *, linear=False):
    """Input-referred power (dBm) of each nonlinear term produced by `x`.

    Keys: ``lna_im3`` (LNA cubic, part uncorrelated with `x`), ``bb_im3``
    (conjugate cubic), ``bb_im2`` (square law, DC included), ``im3`` (both
    third-order terms together) and ``input`` (power of `x`).
    """
    x = as_samples(x, allow_empty=False)
    if vga_gain_db is None:
        vga_gain_db = select_vga_gain(x, p)
    c = coeffs_from_intercepts(p, vga_gain_db, linear=linear)
    ref = abs(c.linear_gain) ** 2
    lna3 = c.alpha * np.abs(x) ** 2 * x
    lna3 = lna3 - (np.vdot(x, lna3) / np.vdot(x, x)) * x
    y_rf = apply_lna(x, c)
    bb3 = c.gamma * np.conj(y_rf) ** 3
    bb2 = c.beta * np.abs(y_rf) ** 2

    def referred(v, gain=1.0):
        return power_dbm(np.asarray(v * gain, dtype=np.complex128) / np.sqrt(ref))

    return {
        "input": power_dbm(x),
        "lna_im3": referred(lna3, c.k_bb),
        "bb_im3": referred(bb3),
        "bb_im2": referred(bb2),
        "im3": referred(c.k_bb * lna3 + bb3),
    }


class ReceiverChain(TransformerMixin, BaseEstimator):
    """Receiver chain whose AGC decision is learned in :meth:`fit`.

    Parameters
    ----------
    params : RxChainParams, optional
    linear : bool
        Zero every nonlinear coefficient (noise and quantization remain).
    random_state : int, numpy.random.Generator or None
        Noise source. An int gives the same noise on every call; a Generator
        is consumed, so successive captures get fresh noise.

    Attributes
    ----------
    vga_gain_db_ : float
        Frozen AGC gain.
    coeffs_ : PolyCoeffs
    gain_ : complex
        Small-signal voltage gain from chain input to ADC.
    """

    def __init__(self, params=None, linear=False, random_state=None):
        self.params = params
        self.linear = linear
        self.random_state = random_state

    def _params(self):
        return self.params if self.params is not None else RxChainParams()

    def fit(self, x, y=None):
        p = self._params()
        self.vga_gain_db_ = select_vga_gain(x, p)
        self.coeffs_ = coeffs_from_intercepts(p, self.vga_gain_db_, linear=self.linear)
        self.gain_ = self.coeffs_.linear_gain
        return self

    def transform(self, x):
        check_is_fitted(self, "vga_gain_db_")
        return run_rx_chain(x, self._params(), self.random_state,
                            vga_gain_db=self.vga_gain_db_, linear=self.linear)
