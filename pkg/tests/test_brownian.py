import numpy as np
import pytest

from klabc.rng import derive_stream
from klabc.simulators.brownian import OHLCConfig, simulate_brownian_ohlc
from klabc.simulators.gaussian import simulate_gaussian_toy


def test_zero_volatility_deterministic_path():
    cfg = OHLCConfig(days=3, steps_per_day=100, assets=2)
    ds = simulate_brownian_ohlc([0.3, -0.2], np.zeros((2, 2)), cfg,
                                derive_stream(1, 2, 0))
    assert np.allclose(ds.rows, [0.3, 0.0, 0.3, 0.0, -0.2, -0.2])


def test_high_low_close_ordering():
    cfg = OHLCConfig(days=500, steps_per_day=50, assets=2)
    root = np.linalg.cholesky([[1.0, 0.5], [0.5, 1.0]])
    ds = simulate_brownian_ohlc([0.1, -0.1], root, cfg, derive_stream(2, 2, 0))
    for j in range(2):
        high, low, close = ds.rows[:, 3 * j], ds.rows[:, 3 * j + 1], ds.rows[:, 3 * j + 2]
        assert np.all(high >= close) and np.all(close >= low)
        assert np.all(high >= 0) and np.all(low <= 0)  # t = 0 is on the grid


def test_expected_maximum_of_brownian_motion():
    # Continuous-path oracle: E max = sqrt(2/pi).  On an equidistant
    # n-point grid the discrete maximum is biased down by ~beta/sqrt(n)
    # with beta = -zeta(1/2)/sqrt(2 pi) ~ 0.5826 (Broadie-Glasserman-Kou),
    # which at 500 steps (0.026) exceeds the Monte Carlo noise, so the
    # test checks the corrected value tightly and the continuous value
    # loosely.
    cfg = OHLCConfig(days=100_000, steps_per_day=500, assets=1)
    ds = simulate_brownian_ohlc([0.0], np.eye(1), cfg, derive_stream(3, 2, 0))
    mean_high = ds.rows[:, 0].mean()
    continuous = np.sqrt(2.0 / np.pi)
    corrected = continuous - 0.5826 / np.sqrt(cfg.steps_per_day)
    assert mean_high == pytest.approx(corrected, abs=0.01)
    assert mean_high == pytest.approx(continuous, abs=0.03)


def test_close_matches_drift_and_variance():
    cfg = OHLCConfig(days=50_000, steps_per_day=20, assets=1)
    ds = simulate_brownian_ohlc([0.25], np.eye(1), cfg, derive_stream(4, 2, 0))
    close = ds.rows[:, 2]
    assert abs(close.mean() - 0.25) < 0.02
    assert abs(close.var() - 1.0) < 0.03


def test_root_shape_validation():
    cfg = OHLCConfig(days=2, steps_per_day=10, assets=2)
    with pytest.raises(ValueError):
        simulate_brownian_ohlc([0.0, 0.0], np.array([[1.0, 0.5], [0.0, 1.0]]),
                               cfg, derive_stream(5, 2, 0))
    with pytest.raises(ValueError):
        simulate_brownian_ohlc([0.0], np.eye(2), cfg, derive_stream(5, 2, 0))


def test_same_seed_bit_identical():
    cfg = OHLCConfig(days=10, steps_per_day=30, assets=2)
    root = np.eye(2)
    a = simulate_brownian_ohlc([0.0, 0.0], root, cfg, derive_stream(6, 2, 0))
    b = simulate_brownian_ohlc([0.0, 0.0], root, cfg, derive_stream(6, 2, 0))
    assert np.array_equal(a.rows, b.rows)


def test_gaussian_toy_covariance():
    sigma = np.array([[1.0, 0.4], [0.4, 2.0]])
    ds = simulate_gaussian_toy([1.0, -1.0], sigma, 100_000,
                               derive_stream(7, 2, 0))
    emp = np.cov(ds.rows.T, bias=True)
    assert np.all(np.abs(emp - sigma) < 0.03)
    assert np.all(np.abs(ds.rows.mean(axis=0) - [1.0, -1.0]) < 0.02)


def test_gaussian_toy_degenerate_concentration():
    ds = simulate_gaussian_toy([5.0], [[1e-12]], 1000, derive_stream(8, 2, 0))
    assert np.all(np.abs(ds.rows - 5.0) < 1e-5)


def test_gaussian_toy_rejects_non_pd():
    with pytest.raises(ValueError):
        simulate_gaussian_toy([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]], 10,
                              derive_stream(9, 2, 0))
