"""Univariate g-and-k distribution, defined by its quantile function

    Q(u) = A + B * [1 + c (1 - e^{-g z}) / (1 + e^{-g z})] (1 + z^2)^k z,

with z the standard-normal quantile of u and the conventional c = 0.8.
"""

from __future__ import annotations

import numpy as np

from ..data import Dataset
from ..rng import as_sampler

C_SKEW = 0.8


def gk_quantile(z, A: float, B: float, g: float, k: float) -> np.ndarray:
    """Evaluate the quantile function at standard-normal quantiles z."""
    z = np.asarray(z, dtype=float)
    # (1 - e^{-gz}) / (1 + e^{-gz}) = tanh(gz / 2), which is overflow-safe.
    skew = 1.0 + C_SKEW * np.tanh(0.5 * g * z)
    return A + B * skew * (1.0 + z * z) ** k * z


def simulate_gk(theta, n_obs: int, seed) -> Dataset:
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size != 4:
        raise ValueError("g-and-k expects theta = (A, B, g, k)")
    A, B, g, k = theta
    if B <= 0:
        raise ValueError("g-and-k requires scale B > 0")
    if k <= -0.5:
        raise ValueError("g-and-k requires k > -0.5")
    z = as_sampler(seed).gaussians(n_obs)
    return Dataset(gk_quantile(z, A, B, g, k)[:, None])
