"""Correlated Brownian log-price model observed through daily extremes.

Per trading day (one unit of time) the d-dimensional log-price follows
dX = mu dt + L dW with L L' = Sigma, started at X(0) = 0.  The Euler path is
evaluated on a uniform grid and each day is summarized by the per-asset
(high, low, close) of the discrete path, grid point t = 0 included.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Dataset
from ..rng import as_sampler


@dataclass(frozen=True)
class OHLCConfig:
    days: int
    steps_per_day: int = 500
    assets: int = 2

    def __post_init__(self):
        if self.days < 1 or self.steps_per_day < 1 or self.assets < 1:
            raise ValueError("days, steps_per_day and assets must be >= 1")


def simulate_brownian_ohlc(mu, root, cfg: OHLCConfig, seed) -> Dataset:
    """Rows are (H_1, L_1, S_1, ..., H_d, L_d, S_d), one row per day."""
    mu = np.asarray(mu, dtype=float).ravel()
    root = np.atleast_2d(np.asarray(root, dtype=float))
    d = cfg.assets
    if mu.size != d or root.shape != (d, d):
        raise ValueError("mu and root must match the configured asset count")
    if np.any(np.triu(root, 1) != 0) or np.any(np.diag(root) < 0):
        raise ValueError("root must be lower triangular with nonnegative diagonal")

    dt = 1.0 / cfg.steps_per_day
    z = as_sampler(seed).gaussians((cfg.days, cfg.steps_per_day, d))
    increments = mu * dt + np.sqrt(dt) * (z @ root.T)
    paths = np.concatenate(
        [np.zeros((cfg.days, 1, d)), np.cumsum(increments, axis=1)], axis=1)

    high = paths.max(axis=1)
    low = paths.min(axis=1)
    close = paths[:, -1, :]
    rows = np.empty((cfg.days, 3 * d))
    rows[:, 0::3] = high
    rows[:, 1::3] = low
    rows[:, 2::3] = close
    return Dataset(rows)
