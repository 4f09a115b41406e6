import numpy as np
import pytest

from klabc.rng import derive_stream
from klabc.simulators.mg1 import interdeparture_times, simulate_mg1


def queue_discipline_oracle(service, arrivals):
    """Independent M/G/1 bookkeeping: explicit arrival/service-start/departure
    clocks instead of the inter-departure recursion."""
    service = np.atleast_2d(service)
    arrivals = np.atleast_2d(arrivals)
    out = np.empty_like(service)
    for i in range(service.shape[0]):
        arrival_times = np.cumsum(arrivals[i])
        departure = 0.0
        prev_departure = 0.0
        for k in range(service.shape[1]):
            start = max(arrival_times[k], departure)
            departure = start + service[i, k]
            out[i, k] = departure - prev_departure
            prev_departure = departure
    return out


def test_first_departure_is_service_plus_arrival():
    service = np.array([[2.0, 1.0]])
    arrivals = np.array([[0.7, 0.1]])
    x = interdeparture_times(service, arrivals)
    assert x[0, 0] == pytest.approx(2.7)


def test_hand_trace_deterministic_service():
    # Service exactly 2, arrivals all 0.1: queue never empties after the
    # first job, so later inter-departures equal the service time.
    service = np.full((1, 5), 2.0)
    arrivals = np.full((1, 5), 0.1)
    x = interdeparture_times(service, arrivals)
    assert np.allclose(x[0], [2.1, 2.0, 2.0, 2.0, 2.0])


def test_recursion_matches_queue_discipline_oracle():
    rng = np.random.default_rng(123)
    for _ in range(50):
        service = rng.uniform(0.1, 3.0, size=(20, 5))
        arrivals = rng.exponential(2.0, size=(20, 5))
        assert np.allclose(interdeparture_times(service, arrivals),
                           queue_discipline_oracle(service, arrivals),
                           rtol=0, atol=1e-12)


def test_saturating_queue_mean_decays_to_mean_service():
    # At the arrival-rate bound 0.5 the backlog builds up, so successive
    # inter-departure means fall toward the mean service time (t1+t2)/2 = 3.
    ds = simulate_mg1([1.0, 5.0, 0.5], 20_000, derive_stream(1, 2, 0))
    col_means = ds.rows.mean(axis=0)
    assert np.all(np.diff(col_means) < 0)
    assert np.all(col_means[1:] >= 3.0) and np.all(col_means[1:] < 3.6)
    assert abs(col_means[-1] - 3.0) < 0.2
    # Monte Carlo cross-check against the independent bookkeeping oracle.
    rng = np.random.default_rng(7)
    service = rng.uniform(1.0, 5.0, size=(20_000, 5))
    arrivals = rng.exponential(1 / 0.5, size=(20_000, 5))
    oracle_means = queue_discipline_oracle(service, arrivals).mean(axis=0)
    assert np.all(np.abs(col_means - oracle_means) < 0.06)


def test_positive_interdepartures():
    ds = simulate_mg1([0.5, 2.0, 0.2], 2000, derive_stream(2, 2, 0))
    assert np.all(ds.rows > 0)
    assert ds.rows.shape == (2000, 5)


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        simulate_mg1([2.0, 1.0, 0.2], 10, derive_stream(3, 2, 0))
    with pytest.raises(ValueError):
        simulate_mg1([-1.0, 1.0, 0.2], 10, derive_stream(3, 2, 0))
    with pytest.raises(ValueError):
        simulate_mg1([1.0, 2.0, 0.0], 10, derive_stream(3, 2, 0))


def test_same_seed_bit_identical():
    a = simulate_mg1([1.0, 5.0, 0.2], 100, derive_stream(4, 2, 1))
    b = simulate_mg1([1.0, 5.0, 0.2], 100, derive_stream(4, 2, 1))
    assert np.array_equal(a.rows, b.rows)
