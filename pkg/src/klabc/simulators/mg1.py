"""M/G/1 queue: first five inter-departure times per realization.

Service times are U[theta1, theta2], inter-arrival times Exp(theta3), and the
observed inter-departure times follow the recursion

    x_k = u_k + max(0, sum_{j<=k} w_j - sum_{j<k} x_j).
"""

from __future__ import annotations

import numpy as np

from ..data import Dataset
from ..rng import as_sampler

N_DEPARTURES = 5


def interdeparture_times(service: np.ndarray, arrivals: np.ndarray) -> np.ndarray:
    """Apply the inter-departure recursion row-wise.

    service, arrivals: (n, k) matrices of service times and inter-arrival
    times for n independent queue realizations.
    """
    service = np.atleast_2d(service)
    arrivals = np.atleast_2d(arrivals)
    if service.shape != arrivals.shape:
        raise ValueError("service and arrival matrices must match in shape")
    n, k = service.shape
    x = np.empty((n, k))
    arrival_clock = np.cumsum(arrivals, axis=1)
    departure_clock = np.zeros(n)
    for j in range(k):
        x[:, j] = service[:, j] + np.maximum(0.0, arrival_clock[:, j] - departure_clock)
        departure_clock += x[:, j]
    return x


def simulate_mg1(theta, n_obs: int, seed) -> Dataset:
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size != 3:
        raise ValueError("mg1 expects theta = (theta1, theta2, theta3)")
    t1, t2, t3 = theta
    if not (0 <= t1 <= t2):
        raise ValueError("mg1 requires 0 <= theta1 <= theta2")
    if t3 <= 0:
        raise ValueError("mg1 requires arrival rate theta3 > 0")
    sampler = as_sampler(seed)
    service = t1 + (t2 - t1) * sampler.uniforms((n_obs, N_DEPARTURES))
    arrivals = sampler.exponentials(t3, (n_obs, N_DEPARTURES))
    return Dataset(interdeparture_times(service, arrivals))
