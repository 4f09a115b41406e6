"""Multivariate Gaussian toy model, used as an oracle for the closed-form
KL divergences in tests and for the conjugate sanity experiment."""

from __future__ import annotations

import numpy as np
from scipy.linalg import cholesky

from ..data import Dataset
from ..rng import as_sampler


def simulate_gaussian_toy(mu, sigma, n_obs: int, seed) -> Dataset:
    mu = np.asarray(mu, dtype=float).ravel()
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if sigma.shape != (mu.size, mu.size):
        raise ValueError("sigma must be d x d for a d-dimensional mean")
    try:
        root = cholesky(sigma, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ValueError("sigma must be positive definite") from exc
    z = as_sampler(seed).gaussians((n_obs, mu.size))
    return Dataset(mu + z @ root.T)
