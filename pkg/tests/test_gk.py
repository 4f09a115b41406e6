import numpy as np
import pytest

from klabc.rng import derive_stream
from klabc.simulators.gk import gk_quantile, simulate_gk


def test_median_is_location():
    assert gk_quantile(0.0, A=3.0, B=1.0, g=2.0, k=0.5) == 3.0


def test_zero_g_zero_k_is_standard_normal():
    z = np.linspace(-3, 3, 25)
    assert np.allclose(gk_quantile(z, A=0.0, B=1.0, g=0.0, k=0.0), z)


def test_value_at_z_one():
    # 3 + (1 + 0.8 tanh(1)) * 2^0.5; the skew bracket uses tanh(gz/2).
    val = gk_quantile(1.0, A=3.0, B=1.0, g=2.0, k=0.5)
    expect = 3.0 + (1.0 + 0.8 * np.tanh(1.0)) * np.sqrt(2.0)
    assert val == pytest.approx(expect, abs=1e-12)
    assert val == pytest.approx(5.2758872, abs=1e-6)


def test_extreme_g_is_overflow_safe():
    assert np.isfinite(gk_quantile(-8.0, A=0.0, B=1.0, g=500.0, k=0.1))


def test_empirical_median_near_location():
    ds = simulate_gk([3.0, 1.0, 2.0, 0.5], 100_000, derive_stream(1, 2, 0))
    assert abs(np.median(ds.rows) - 3.0) < 0.02


def test_monotone_quantile_function():
    z = np.linspace(-4, 4, 200)
    q = gk_quantile(z, A=3.0, B=1.0, g=2.0, k=0.5)
    assert np.all(np.diff(q) > 0)


def test_parameter_validation():
    with pytest.raises(ValueError):
        simulate_gk([3.0, 0.0, 2.0, 0.5], 10, derive_stream(2, 2, 0))
    with pytest.raises(ValueError):
        simulate_gk([3.0, 1.0, 2.0, -0.6], 10, derive_stream(2, 2, 0))


def test_shape_and_determinism():
    a = simulate_gk([3.0, 1.0, 2.0, 0.5], 50, derive_stream(3, 2, 0))
    b = simulate_gk([3.0, 1.0, 2.0, 0.5], 50, derive_stream(3, 2, 0))
    assert a.rows.shape == (50, 1)
    assert np.array_equal(a.rows, b.rows)
