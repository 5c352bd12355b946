"""Reference computations that share no code with the package under test."""

import numpy as np

N_FFT = 4096
F1, F2 = 100, 117


def two_tone(p_tone_dbm, n=N_FFT, bins=(F1, F2)):
    """Two equal complex tones on exact FFT bins, each carrying `p_tone_dbm`."""
    a = np.sqrt(10.0 ** ((p_tone_dbm - 30.0) / 10.0))
    t = np.arange(n)
    return a * (np.exp(2j * np.pi * bins[0] * t / n) + np.exp(2j * np.pi * bins[1] * t / n))


def line_dbm(y, k, n=N_FFT):
    """Power (dBm) of the spectral line at integer bin `k` (negative allowed)."""
    amp = np.abs(np.fft.fft(y)[k % n]) / n
    return 20.0 * np.log10(amp) + 30.0


def extrapolated_intercept(p_in, p_fund, p_prod, order):
    """Input intercept from slope-1 and slope-`order` lines fitted in dB.

    Returns ``(intercept_dbm, fitted_product_slope)``.
    """
    p_in, p_fund, p_prod = map(np.asarray, (p_in, p_fund, p_prod))
    g = np.mean(p_fund - p_in)
    c = np.mean(p_prod - order * p_in)
    slope = np.polyfit(p_in, p_prod, 1)[0]
    return (g - c) / (order - 1), slope


def measure_intercept(stage, p_in_dbm, product_bin, order):
    """Two-tone intercept of a sample-wise `stage` callable."""
    fund, prod = [], []
    for p in p_in_dbm:
        y = stage(two_tone(p))
        fund.append(line_dbm(y, F1))
        prod.append(line_dbm(y, product_bin))
    return extrapolated_intercept(p_in_dbm, fund, prod, order)


IM3_BIN = 2 * F1 - F2          # direct cubic |x|^2 x
IM3_CONJ_BIN = -(2 * F1 + F2)  # conjugate cubic conj(x)^3
IM2_BIN = F1 - F2              # square law |x|^2


def friis_db(stages):
    """Cascade NF (dB) written out term by term for up to three stages."""
    g = [10 ** (s[0] / 10) for s in stages]
    f = [10 ** (s[1] / 10) for s in stages]
    total = f[0]
    gain = 1.0
    for i in range(1, len(stages)):
        gain *= g[i - 1]
        total += (f[i] - 1) / gain
    return 10 * np.log10(total)


def lstsq(A, y):
    return np.linalg.lstsq(A, y, rcond=None)[0]


def convolve_loop(x, h):
    """Zero-state FIR filtering with explicit loops, truncated to len(x)."""
    out = np.zeros(len(x), dtype=complex)
    for n in range(len(x)):
        for k in range(len(h)):
            if n - k >= 0:
                out[n] += h[k] * x[n - k]
    return out
