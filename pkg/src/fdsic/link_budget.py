"""Analytic power levels at the detector input versus transmit power.

All levels are referred to the receiver-chain input, so the signal of
interest and thermal noise stay constant while SI-driven terms grow with the
transmit power. Per-stage distortion products are combined as powers.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .rf_models import BOLTZMANN_DBM_HZ
from .signal import power_sum_dbm

COMPONENTS = ("soi", "linear_si", "im2", "im3", "thermal", "quantization")


def noise_floor_dbm(bandwidth_hz, nf_db):
    if bandwidth_hz <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth_hz}")
    return BOLTZMANN_DBM_HZ + 10.0 * np.log10(bandwidth_hz) + nf_db


def sensitivity_dbm(bandwidth_hz, nf_db, snr_req_db):
    return noise_floor_dbm(bandwidth_hz, nf_db) + snr_req_db


def cascaded_nf(stages):
    """Friis noise figure (dB) of stages given as ``(gain_db, nf_db)`` pairs.

    Objects with ``gain_db`` and ``nf_db`` attributes are accepted too.
    """
    stages = list(stages)
    if not stages:
        raise ValueError("no stages given")
    total_f = 0.0
    gain = 1.0
    for i, stage in enumerate(stages):
        g_db, nf = (stage.gain_db, stage.nf_db) if hasattr(stage, "nf_db") else stage
        f = 10.0 ** (nf / 10.0)
        total_f += f if i == 0 else (f - 1.0) / gain
        gain *= 10.0 ** (g_db / 10.0)
    return float(10.0 * np.log10(total_f))


def quantization_snr_db(bits):
    """Full-scale complex-tone SQNR of a mid-rise quantizer on I and Q."""
    return 10.0 * np.log10(1.5 * 4.0 ** bits)


@dataclass(frozen=True)
class LinkBudgetReport:
    """Component levels (dBm, input referred) per transmit power."""

    tx_dbm: np.ndarray
    si_input_dbm: np.ndarray
    levels: dict
    sinr_db: np.ndarray

    @property
    def columns(self):
        return ["tx_dbm", "si_input_dbm", *(f"{c}_dbm" for c in COMPONENTS), "sinr_db"]

    def rows(self):
        for k, tx in enumerate(self.tx_dbm):
            yield [tx, self.si_input_dbm[k], *(self.levels[c][k] for c in COMPONENTS), self.sinr_db[k]]

    def to_csv(self, path=None):
        """Write (or return, when `path` is None) the sweep as CSV."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows():
            writer.writerow([f"{v:.6f}" for v in row])
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w") as fh:
            fh.write(text)
        return text


def _stage_products(si_dbm, rx):
    """Input-referred 2nd- and 3rd-order levels per stage for SI level `si_dbm`."""
    lna, mixer, vga = rx.lna, rx.mixer, rx.vga
    g_before = {"lna": 0.0, "mixer": lna.gain_db, "vga": lna.gain_db + mixer.gain_db}
    im3, im2 = [], []
    for name, st in (("lna", lna), ("mixer", mixer), ("vga", vga)):
        p_in = si_dbm + g_before[name]
        im3.append(3.0 * p_in - 2.0 * st.iip3_dbm - g_before[name])
        if name != "lna":
            # RF second-order products of the LNA fall outside the baseband
            im2.append(2.0 * p_in - st.iip2_dbm - g_before[name])
    return power_sum_dbm(*im2), power_sum_dbm(*im3)


def component_power_sweep(cfg, tx_dbm=None, *, linear_chain=None):
    """Analytic per-component power levels over a transmit-power sweep.

    Parameters
    ----------
    cfg : SimConfig
    tx_dbm : array_like, optional
        Transmit powers per antenna; defaults to the configured sweep.
    linear_chain : bool, optional
        Drop receiver distortion; defaults to ``cfg.flags.linear_chain``.
    """
    sysp, rx = cfg.system, cfg.rx_chain()
    if tx_dbm is None:
        tx_dbm = cfg.sweep.tx_powers()
    if linear_chain is None:
        linear_chain = cfg.flags.linear_chain
    tx_dbm = np.atleast_1d(np.asarray(tx_dbm, dtype=float))

    thermal = noise_floor_dbm(sysp.bandwidth_hz, sysp.noise_figure_db)
    linear_si = thermal - cfg.link_budget.linear_si_margin_db
    sqnr = quantization_snr_db(rx.adc_bits)
    pre_vga_gain = rx.lna.gain_db + rx.mixer.gain_db

    si_in = tx_dbm + 10.0 * np.log10(sysp.n_tx) - sysp.antenna_separation_db - sysp.rf_cancellation_db
    levels = {c: np.empty_like(tx_dbm) for c in COMPONENTS}
    sinr = np.empty_like(tx_dbm)
    for k, si in enumerate(si_in):
        im2, im3 = (-np.inf, -np.inf) if linear_chain else _stage_products(si, rx)
        total_in = power_sum_dbm(si, sysp.received_signal_power_dbm, thermal)
        vga = np.clip(rx.adc_full_scale_dbm - rx.backoff_db - total_in - pre_vga_gain,
                      rx.vga.min_gain_db, rx.vga.max_gain_db)
        quant = rx.adc_full_scale_dbm - sqnr - pre_vga_gain - vga
        row = {"soi": sysp.received_signal_power_dbm, "linear_si": linear_si, "im2": im2, "im3": im3,
               "thermal": thermal, "quantization": quant}
        for c in COMPONENTS:
            levels[c][k] = row[c]
        sinr[k] = sysp.received_signal_power_dbm - power_sum_dbm(*(row[c] for c in COMPONENTS if c != "soi"))
    return LinkBudgetReport(tx_dbm, si_in, levels, sinr)
