import numpy as np
import pytest

from klabc.rng import derive_stream
from klabc.simulators.lotka_volterra import (LVConfig, _gillespie_series,
                                             _gillespie_series_py,
                                             lv_series_features, simulate_lv)


def test_series_length():
    cfg = LVConfig()
    assert cfg.n_records == 201
    ds, _ = simulate_lv([0.01, 0.5, 1.0, 0.01], cfg, 3, derive_stream(1, 2, 0))
    assert ds.rows.shape == (3, 402)


def test_zero_rates_freeze_state():
    cfg = LVConfig(x0=50, y0=100)
    ds, flags = simulate_lv([0, 0, 0, 0], cfg, 2, derive_stream(2, 2, 0))
    assert np.all(ds.rows[:, :201] == 50)
    assert np.all(ds.rows[:, 201:] == 100)
    assert not flags.any()


def test_pure_death_expectation():
    # theta = (0, 0.5, 0, 0): predators die at rate 0.5 each, so
    # E[X_t] = 50 exp(-0.5 t); at t = 2 that is 50 e^{-1} ~ 18.39.
    cfg = LVConfig(x0=50, y0=100, horizon=2.0, record_dt=0.1)
    ds, _ = simulate_lv([0.0, 0.5, 0.0, 0.0], cfg, 2000, derive_stream(3, 2, 0))
    at_t2 = ds.rows[:, cfg.n_records - 1]
    assert abs(at_t2.mean() - 50 * np.exp(-1.0)) < 1.0


def test_truth_run_oscillates():
    cfg = LVConfig()
    ds, flags = simulate_lv([0.01, 0.5, 1.0, 0.01], cfg, 5,
                            derive_stream(4, 2, 0))
    pred, prey = ds.rows[:, :201], ds.rows[:, 201:]
    assert np.all(ds.rows >= 0)
    assert np.all(ds.rows == np.round(ds.rows))  # integer populations
    assert np.all(pred.std(axis=1) > 0)
    assert np.all(prey.std(axis=1) > 0)


def test_event_budget_truncates_and_flags():
    # Pure prey birth explodes exponentially and must hit the cap.
    cfg = LVConfig(x0=0, y0=100, max_events=500)
    ds, flags = simulate_lv([0.0, 0.0, 1.0, 0.0], cfg, 2, derive_stream(5, 2, 0))
    assert flags.all()
    # frozen tail: the last recorded values repeat once the cap is hit
    assert np.all(ds.rows[:, 402 - 1] == ds.rows[:, 402 - 2])


def test_jitted_loop_matches_python_mirror():
    cfg = LVConfig(horizon=5.0)
    for theta in ([0.01, 0.5, 1.0, 0.01], [0.0, 0.5, 0.0, 0.0]):
        rng_a = derive_stream(6, 2, 0).sampler().rng
        rng_b = derive_stream(6, 2, 0).sampler().rng
        s_a, t_a = _gillespie_series(rng_a, *theta, cfg.x0, cfg.y0,
                                     cfg.record_dt, cfg.n_records,
                                     cfg.max_events)
        s_b, t_b = _gillespie_series_py(rng_b, *theta, cfg.x0, cfg.y0,
                                        cfg.record_dt, cfg.n_records,
                                        cfg.max_events)
        assert np.array_equal(s_a, s_b)
        assert t_a == t_b


def test_negative_rates_rejected():
    with pytest.raises(ValueError):
        simulate_lv([-0.01, 0.5, 1.0, 0.01], LVConfig(), 1,
                    derive_stream(7, 2, 0))


def test_same_seed_bit_identical():
    cfg = LVConfig(horizon=3.0)
    a, _ = simulate_lv([0.01, 0.5, 1.0, 0.01], cfg, 4, derive_stream(8, 2, 0))
    b, _ = simulate_lv([0.01, 0.5, 1.0, 0.01], cfg, 4, derive_stream(8, 2, 0))
    assert np.array_equal(a.rows, b.rows)


def test_series_features_hand_values():
    # acf1 of (1,2,3,4) under the biased estimator is 1.25 / 5 = 0.25.
    row = np.array([[1.0, 2.0, 3.0, 4.0, 1.0, 2.0, 3.0, 4.0]])
    feats = lv_series_features(row)
    assert feats.shape == (1, 9)
    assert feats[0, 0] == pytest.approx(2.5)          # predator mean
    assert feats[0, 1] == pytest.approx(np.log(1.25))  # log variance
    assert feats[0, 2] == pytest.approx(0.25)          # acf lag 1
    assert feats[0, 8] == pytest.approx(1.0)           # cross-correlation


def test_series_features_degenerate_series():
    row = np.array([[2.0, 2.0, 2.0, 2.0, 1.0, 1.0, 1.0, 1.0]])
    feats = lv_series_features(row)
    assert np.all(np.isfinite(feats))
    assert feats[0, 2] == 0.0 and feats[0, 8] == 0.0
