import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from klabc.features import FeatureMap, expand, fit_feature_map


def test_poly2_of_pair():
    out = expand("poly2", np.array([[2.0, 3.0]]))
    assert np.allclose(out, [[2.0, 3.0, 4.0, 9.0, 6.0]])


def test_poly2_interaction_order_is_lexicographic():
    out = expand("poly2", np.array([[1.0, 2.0, 3.0]]))
    # linear block, squares block, then (0,1), (0,2), (1,2)
    assert np.allclose(out, [[1, 2, 3, 1, 4, 9, 2, 3, 6]])


def test_powers3_scalar():
    assert np.allclose(expand("powers3", np.array([[2.0]])), [[2.0, 4.0, 8.0]])


def test_powers3_blocks():
    out = expand("powers3", np.array([[2.0, -1.0]]))
    assert np.allclose(out, [[2.0, -1.0, 4.0, 1.0, 8.0, -1.0]])


def test_raw_identity():
    rows = np.arange(6.0).reshape(2, 3)
    assert np.array_equal(expand("raw", rows), rows)


@given(st.integers(min_value=1, max_value=8))
@settings(max_examples=8, deadline=None)
def test_poly2_feature_count(p):
    rows = np.ones((2, p))
    assert expand("poly2", rows).shape[1] == p + p + p * (p - 1) // 2


def test_standardization_freezes_training_stats():
    pool = np.array([[0.0], [2.0], [4.0]])
    fitted = fit_feature_map(FeatureMap("raw", standardize=True), pool)
    assert np.allclose(fitted(pool).mean(axis=0), 0.0)
    assert np.allclose(fitted(pool).std(axis=0), 1.0)
    # new data is mapped with the frozen statistics, not its own
    other = fitted(np.array([[6.0]]))
    assert other[0, 0] == pytest.approx((6.0 - 2.0) / pool.std())


def test_no_standardization_passthrough():
    pool = np.array([[1.0, 2.0], [3.0, 4.0]])
    fitted = fit_feature_map(FeatureMap("poly2", standardize=False), pool)
    assert np.allclose(fitted(pool), expand("poly2", pool))


def test_constant_feature_does_not_divide_by_zero():
    pool = np.array([[1.0], [1.0], [1.0]])
    fitted = fit_feature_map(FeatureMap("raw", standardize=True), pool)
    assert np.all(np.isfinite(fitted(pool)))


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        FeatureMap("cubic-spline")
    with pytest.raises(ValueError):
        expand("nope", np.ones((1, 2)))
