"""Predator-prey birth/death process simulated with Gillespie's direct method.

State (X, Y) = (predators, prey).  Event rates and effects:

    r1 = theta1 * X * Y   ->  X + 1   (predator birth)
    r2 = theta2 * X       ->  X - 1   (predator death)
    r3 = theta3 * Y       ->  Y + 1   (prey birth)
    r4 = theta4 * X * Y   ->  Y - 1   (prey death)

Each series is recorded on a uniform time grid; a row of the output dataset
is the predator series followed by the prey series.  If the total rate hits
zero the state is frozen to the horizon; if the event budget is exhausted the
state is frozen as well and the series is flagged as truncated.

Each event consumes exactly two uniforms (waiting time, reaction choice), so
the stream position after any series is well defined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..data import Dataset
from ..rng import as_sampler


@dataclass(frozen=True)
class LVConfig:
    x0: int = 50
    y0: int = 100
    record_dt: float = 0.1
    horizon: float = 20.0
    max_events: int = 1_000_000

    def __post_init__(self):
        if self.x0 < 0 or self.y0 < 0:
            raise ValueError("initial populations must be nonnegative")
        if self.record_dt <= 0 or self.horizon <= 0:
            raise ValueError("record_dt and horizon must be positive")
        if self.max_events < 1:
            raise ValueError("max_events must be >= 1")

    @property
    def n_records(self) -> int:
        return int(round(self.horizon / self.record_dt)) + 1


@njit(cache=True)
def _gillespie_series(rng, th1, th2, th3, th4, x0, y0,
                      record_dt, n_records, max_events):
    series = np.empty((n_records, 2), dtype=np.int64)
    x = x0
    y = y0
    t = 0.0
    idx = 0
    events = 0
    truncated = False
    while idx < n_records:
        r1 = th1 * x * y
        r2 = th2 * x
        r3 = th3 * y
        r4 = th4 * x * y
        total = r1 + r2 + r3 + r4
        if total <= 0.0:
            break
        dt = -np.log(1.0 - rng.random()) / total
        t_new = t + dt
        while idx < n_records and idx * record_dt < t_new:
            series[idx, 0] = x
            series[idx, 1] = y
            idx += 1
        if idx >= n_records:
            break
        pick = rng.random() * total
        if pick < r1:
            x += 1
        elif pick < r1 + r2:
            x -= 1
        elif pick < r1 + r2 + r3:
            y += 1
        else:
            y -= 1
        t = t_new
        events += 1
        if events >= max_events:
            truncated = True
            break
    while idx < n_records:
        series[idx, 0] = x
        series[idx, 1] = y
        idx += 1
    return series, truncated


def _gillespie_series_py(rng, th1, th2, th3, th4, x0, y0,
                         record_dt, n_records, max_events):
    """Pure-Python mirror of the jitted loop, kept for cross-checking."""
    return _gillespie_series.py_func(rng, th1, th2, th3, th4, x0, y0,
                                     record_dt, n_records, max_events)


def simulate_lv(theta, cfg: LVConfig, n_series: int, seed):
    """Returns (Dataset with rows (n_series, 2T), truncation flags)."""
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size != 4:
        raise ValueError("lv expects theta = (theta1..theta4)")
    if np.any(theta < 0):
        raise ValueError("lv rate constants must be nonnegative")
    rng = as_sampler(seed).rng
    T = cfg.n_records
    rows = np.empty((n_series, 2 * T))
    flags = np.zeros(n_series, dtype=bool)
    for i in range(n_series):
        series, truncated = _gillespie_series(
            rng, theta[0], theta[1], theta[2], theta[3],
            cfg.x0, cfg.y0, cfg.record_dt, T, cfg.max_events)
        rows[i, :T] = series[:, 0]
        rows[i, T:] = series[:, 1]
        flags[i] = truncated
    return Dataset(rows), flags


def lv_series_features(rows: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Nine per-series summaries: mean, log-variance, lag-1 and lag-2
    autocorrelation of each component, and the cross-correlation.

    Autocorrelations use the biased estimator
    sum_t (x_t - xbar)(x_{t+k} - xbar) / sum_t (x_t - xbar)^2; degenerate
    (constant) series contribute zero correlations.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    T = rows.shape[1] // 2
    pred = rows[:, :T]
    prey = rows[:, T:]

    def component_feats(s):
        mean = s.mean(axis=1)
        dev = s - mean[:, None]
        ss = np.sum(dev * dev, axis=1)
        logvar = np.log(np.maximum(ss / T, eps))
        safe = np.maximum(ss, eps)
        acf1 = np.sum(dev[:, :-1] * dev[:, 1:], axis=1) / safe
        acf2 = np.sum(dev[:, :-2] * dev[:, 2:], axis=1) / safe
        return mean, logvar, acf1, acf2, dev, ss

    m1, lv1, a11, a12, dev1, ss1 = component_feats(pred)
    m2, lv2, a21, a22, dev2, ss2 = component_feats(prey)
    cross = np.sum(dev1 * dev2, axis=1) / np.sqrt(np.maximum(ss1 * ss2, eps))
    return np.column_stack([m1, lv1, a11, a12, m2, lv2, a21, a22, cross])
