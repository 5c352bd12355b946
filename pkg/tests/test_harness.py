import numpy as np
import pytest
from numpy.testing import assert_array_equal

from fdsic import harness
from fdsic.config import SimConfig
from fdsic.harness import (
    SCENARIOS,
    SimulationError,
    average_sinr,
    parse_scenarios,
    realization_seeds,
    run_single,
    run_sweep,
    soi_gain,
    training_power_dbm,
)

SMALL = SimConfig().replace(estimation__n_obs=2000, sweep__realizations=2)
TX = [0.0, 20.0]


def test_parse_scenarios():
    assert [s.name for s in parse_scenarios("all")] == ["a", "b", "c"]
    assert [s.name for s in parse_scenarios("b, c")] == ["b", "c"]
    for bad in ("d", "", "ab"):
        with pytest.raises(ValueError):
            parse_scenarios(bad)


def test_scenario_flags():
    assert SCENARIOS["a"].linear_cancellation and not SCENARIOS["a"].linear_chain
    assert SCENARIOS["c"].linear_chain and not SCENARIOS["c"].linear_cancellation


def test_seeds_deterministic_and_distinct():
    a = [s.generate_state(2) for s in realization_seeds(7, 1, 2)]
    b = [s.generate_state(2) for s in realization_seeds(7, 1, 2)]
    c = [s.generate_state(2) for s in realization_seeds(7, 2, 1)]
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not any(np.array_equal(x, y) for x, y in zip(a, c))
    assert len({tuple(x) for x in a}) == 4


def test_training_power_rule():
    cfg = SimConfig()
    si_gain = -57.0
    # 20 dB below 25 dBm keeps SI well above the floor
    assert training_power_dbm(cfg, 25.0, si_gain) == 5.0
    # at low power the training SNR floor binds, capped at the operating power
    assert training_power_dbm(cfg, 0.0, si_gain) == -20.0
    # weak coupling: the training SNR floor binds, capped at the operating power
    floor = cfg.rx_chain().noise_floor_dbm + 15.0 + 80.0
    assert training_power_dbm(cfg, 10.0, -80.0) == pytest.approx(floor)
    assert training_power_dbm(cfg, -30.0, -80.0) == -30.0


def test_soi_gain_projection():
    rng = np.random.default_rng(0)
    soi = rng.standard_normal(1000) + 1j * rng.standard_normal(1000)
    assert soi_gain((0.5 - 0.1j) * soi, soi) == pytest.approx(0.5 - 0.1j)


def test_average_sinr():
    assert average_sinr([10.0, 20.0]) == pytest.approx(15.0)
    assert average_sinr([10.0, 20.0], "linear") == pytest.approx(10 * np.log10(55.0))
    with pytest.raises(ValueError):
        average_sinr([1.0], "median")


@pytest.fixture(scope="module")
def small_sweep():
    return run_sweep(SMALL, tx_dbm=TX)


def test_sweep_shape_and_csv(small_sweep):
    assert small_sweep.sinr_db.shape == (3, 2, 2)
    lines = small_sweep.to_csv().splitlines()
    assert lines[0].startswith("scenario,tx_dbm,sinr_db")
    assert len(lines) == 1 + 3 * 2
    assert len(small_sweep.detail_csv().splitlines()) == 1 + 3 * 2 * 2
    assert "tx_dbm" in small_sweep.summary()


def test_sweep_physics_coarse(small_sweep):
    a, b = small_sweep.curve("a"), small_sweep.curve("b")
    assert np.all(small_sweep.sinr_db[:, 0] > 12.0)
    assert b[1] - a[1] > 5.0


def test_sweep_deterministic(small_sweep):
    again = run_sweep(SMALL, tx_dbm=TX)
    assert again.to_csv() == small_sweep.to_csv()


def test_parallel_matches_serial(small_sweep):
    par = run_sweep(SMALL, tx_dbm=TX, n_jobs=2)
    assert_array_equal(par.sinr_db, small_sweep.sinr_db)


def test_scenario_subset_reuses_realizations(small_sweep):
    only_b = run_sweep(SMALL, "b", tx_dbm=TX)
    assert_array_equal(only_b.sinr_db[0], small_sweep.sinr_db[1])


def test_seed_changes_results(small_sweep):
    other = run_sweep(SMALL.replace(sweep__seed=1), tx_dbm=TX)
    assert not np.array_equal(other.sinr_db, small_sweep.sinr_db)


def test_si_disabled_reaches_ideal():
    cfg = SMALL.replace(flags__si_enabled=False)
    res = run_single(cfg, 20.0, "b")
    assert res.sinr_db == pytest.approx(15.0, abs=0.5)


def test_single_keeps_artifacts():
    res = run_single(SMALL, 10.0, "b")
    assert res.channel is not None and res.frame is not None
    assert {"stage_a", "stage_b"} <= set(res.estimates)
    text = harness.format_powers(res)
    assert "sinr" in text and "vga_gain_b" in text


def test_reuse_baseline_runs():
    cfg = SMALL.replace(estimation__linear_baseline="reuse")
    assert np.isfinite(run_single(cfg, 10.0, "a").sinr_db)


def test_failure_carries_context(monkeypatch):
    def boom(*args, **kwargs):
        raise np.linalg.LinAlgError("singular")

    monkeypatch.setattr(harness, "run_realization", boom)
    with pytest.raises(SimulationError, match=r"scenario a, tx 5 dBm.*realization 0.*seed 20140101"):
        run_sweep(SMALL, "a", tx_dbm=[5.0], realizations=1)


def test_bad_realizations():
    with pytest.raises(ValueError):
        run_sweep(SMALL, realizations=0)
