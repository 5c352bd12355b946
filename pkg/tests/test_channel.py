import numpy as np
import pytest
from numpy.testing import assert_allclose

from fdsic.channel import (
    SiChannel,
    SoiSource,
    apply_mimo_channel,
    generate_si_channel,
    received_si_power_dbm,
    rf_cancellation,
)
from fdsic.signal import power_dbm
from fdsic.waveform import OfdmParams, generate_frame
from oracles import convolve_loop

FRAME = generate_frame(OfdmParams(), 94, 2, 17)


@pytest.mark.parametrize("seed", range(5))
def test_pair_energy_matches_isolation(seed):
    ch = generate_si_channel(2, 2, 5, 40.0, seed)
    assert_allclose(ch.pair_energy_db(), -40.0, atol=0.01)
    assert_allclose(np.sum(np.abs(ch.taps) ** 2, axis=2), 1e-4, rtol=2e-3)


def test_single_tap_channel():
    ch = generate_si_channel(1, 1, 1, 40.0, 0)
    assert abs(ch.taps[0, 0, 0]) == pytest.approx(0.01)


def test_decay_profile_statistics():
    taps = np.stack([generate_si_channel(1, 1, 5, 0.0, s, decay_db_per_tap=3.0).taps[0, 0] for s in range(1000)])
    p = np.mean(np.abs(taps) ** 2, axis=0)
    # per-pair energy normalization pulls the ratios slightly below 2
    assert_allclose(p[:-1] / p[1:], 10 ** 0.3, rtol=0.2)
    assert np.all(np.diff(p) < 0)


def test_rf_residual_magnitude():
    ch = generate_si_channel(3, 2, 4, 40.0, 1, rf_cancellation_db=20.0)
    assert_allclose(np.abs(ch.rf_residual), 0.1)


def test_channel_deterministic():
    a, b = generate_si_channel(2, 2, 5, seed=8), generate_si_channel(2, 2, 5, seed=8)
    assert_allclose(a.taps, b.taps)
    assert_allclose(a.rf_residual, b.rf_residual)


def test_identity_tap_delays_input():
    taps = np.zeros((1, 1, 3), complex)
    taps[0, 0, 2] = 1.0
    x = FRAME.samples[:1, :50]
    out = apply_mimo_channel(x, SiChannel(taps), 30.0)
    assert_allclose(out[0, 2:], x[0, :-2])
    assert_allclose(out[0, :2], 0)


def test_mimo_sum_matches_loop_oracle():
    ch = generate_si_channel(2, 2, 5, 40.0, 3)
    x = FRAME.samples[:, :200]
    out = apply_mimo_channel(x, ch, 0.0)
    a = np.sqrt(1e-3)
    for i in range(2):
        ref = sum(convolve_loop(a * x[j], ch.taps[i, j]) for j in range(2))
        assert_allclose(out[i], ref, atol=1e-15)


def test_two_tx_si_power():
    # the band is narrow against the tap spacing, so single draws fade; the ensemble does not
    levels = [np.mean(np.abs(apply_mimo_channel(FRAME, generate_si_channel(2, 2, 5, 40.0, s), 10.0)) ** 2)
              for s in range(200)]
    assert 10 * np.log10(np.mean(levels)) + 30 == pytest.approx(-27.0, abs=0.3)
    ch = generate_si_channel(2, 2, 5, 40.0, 4)
    assert_allclose(received_si_power_dbm(ch, 10.0, after_rf=False), 10 - 40 + 10 * np.log10(2), atol=1e-9)


def test_channel_is_linear():
    ch = generate_si_channel(2, 2, 5, 40.0, 4)
    x = FRAME.samples[:, :300]
    assert_allclose(apply_mimo_channel(3.0 * x, ch, 0.0), 3.0 * apply_mimo_channel(x, ch, 0.0))


def test_soi_power_and_passthrough():
    soi = SoiSource(-83.9, seed=2).samples(10000)
    assert power_dbm(soi) == pytest.approx(-83.9, abs=1e-9)
    ch = generate_si_channel(2, 2, 5, 40.0, 4)
    muted = np.zeros_like(FRAME.samples)
    out = apply_mimo_channel(muted, ch, 10.0, soi=np.pad(soi, (0, FRAME.samples.shape[1] - soi.size)))
    after = rf_cancellation(out, muted, ch, 10.0)
    assert power_dbm(after[0, :10000]) == pytest.approx(-83.9, abs=0.01)


def test_rf_cancellation_removes_20_db():
    ch = generate_si_channel(2, 2, 5, 40.0, 5)
    rx = apply_mimo_channel(FRAME, ch, 10.0)
    after = rf_cancellation(rx, FRAME, ch, 10.0)
    for i in range(2):
        assert power_dbm(after[i]) - power_dbm(rx[i]) == pytest.approx(-20.0, abs=1e-9)
    assert_allclose(after, ch.rf_residual[:, None] * rx, atol=1e-15)


def test_rf_cancellation_dimension_errors():
    ch = generate_si_channel(2, 2, 5, seed=0)
    with pytest.raises(ValueError):
        rf_cancellation(np.zeros((3, 10)), FRAME.samples[:, :10], ch, 0.0)
    with pytest.raises(ValueError):
        apply_mimo_channel(FRAME.samples[:1], ch, 0.0)


def test_channel_json_roundtrip(tmp_path):
    ch = generate_si_channel(2, 2, 5, 40.0, 6)
    path = tmp_path / "ch.json"
    ch.save(path)
    back = SiChannel.load(path)
    assert_allclose(back.taps, ch.taps, rtol=0, atol=0)
    assert_allclose(back.rf_residual, ch.rf_residual, rtol=0, atol=0)
    assert back.isolation_db == 40.0


def test_bad_taps_shape():
    with pytest.raises(ValueError):
        SiChannel(np.zeros((2, 5)))
