"""Forward models.  Each simulator is a pure function of
(theta, config, SeedSpec): identical inputs give bit-identical datasets.

``Model`` wraps one forward model together with its configuration so the
engine can simulate datasets of any size from a flat parameter vector and,
where relevant, report derived quantities (e.g. covariance entries for the
Brownian model).  Everything here is picklable so proposals can be evaluated
in worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import Callable, Optional

import numpy as np

from ..data import Dataset
from .brownian import OHLCConfig, simulate_brownian_ohlc
from .gaussian import simulate_gaussian_toy
from .gk import gk_quantile, simulate_gk
from .lotka_volterra import LVConfig, lv_series_features, simulate_lv
from .mg1 import interdeparture_times, simulate_mg1

__all__ = [
    "Dataset", "LVConfig", "OHLCConfig", "Model", "make_model",
    "simulate_mg1", "simulate_lv", "simulate_gk", "simulate_brownian_ohlc",
    "simulate_gaussian_toy", "interdeparture_times", "gk_quantile",
    "lv_series_features",
]


@dataclass(frozen=True)
class Model:
    """A named forward model bound to its configuration.

    simulate(theta, n_rows, seed) -> (Dataset, n_flagged_rows).  Flags count
    truncated rows (only the Lotka-Volterra simulator ever truncates).
    """

    kind: str
    param_dim: int
    param_names: tuple
    _simulate: Callable
    report_names: tuple = ()
    _report: Optional[Callable] = None

    def simulate(self, theta, n_rows: int, seed):
        return self._simulate(theta, n_rows, seed)

    def report_transform(self, thetas: np.ndarray):
        """Map raw parameter draws (N, d) to reported coordinates (N, k)."""
        thetas = np.atleast_2d(thetas)
        if self._report is None:
            return self.param_names, thetas
        return self.report_names, self._report(thetas)


def _sim_mg1(theta, n, seed):
    return simulate_mg1(theta, n, seed), 0


def _sim_gk(theta, n, seed):
    return simulate_gk(theta, n, seed), 0


def _sim_lv(theta, n, seed, cfg: LVConfig):
    ds, flags = simulate_lv(theta, cfg, n, seed)
    return ds, int(flags.sum())


def _sim_brownian(theta, n, seed, steps: int, assets: int):
    from ..priors import theta_to_mu_root
    mu, root = theta_to_mu_root(theta, assets)
    cfg = OHLCConfig(days=n, steps_per_day=steps, assets=assets)
    return simulate_brownian_ohlc(mu, root, cfg, seed), 0


def _sim_gauss(theta, n, seed, sigma):
    return simulate_gaussian_toy(theta, sigma, n, seed), 0


def _brownian_report(thetas: np.ndarray) -> np.ndarray:
    # (mu1, mu2, l11, l21, l22) -> (mu1, mu2, s11, s12, s22) via Sigma = LL'.
    mu1, mu2, l11, l21, l22 = (thetas[:, i] for i in range(5))
    return np.column_stack([mu1, mu2, l11 ** 2, l11 * l21, l21 ** 2 + l22 ** 2])


def make_model(kind: str, **kwargs) -> Model:
    """Construct the forward model named by ``kind``.

    kwargs carry model-specific configuration: ``lv`` accepts LVConfig
    fields, ``brownian`` accepts steps_per_day/assets, ``gauss`` needs the
    fixed known covariance ``sigma``.
    """
    if kind == "mg1":
        if kwargs:
            raise ValueError(f"unknown mg1 options: {sorted(kwargs)}")
        return Model(kind, 3, ("theta1", "theta2", "theta3"), _sim_mg1)
    if kind == "lv":
        cfg = LVConfig(**kwargs)
        return Model(kind, 4, ("theta1", "theta2", "theta3", "theta4"),
                     partial(_sim_lv, cfg=cfg))
    if kind == "gk":
        if kwargs:
            raise ValueError(f"unknown gk options: {sorted(kwargs)}")
        return Model(kind, 4, ("A", "B", "g", "k"), _sim_gk)
    if kind == "brownian":
        steps = int(kwargs.pop("steps_per_day", 500))
        assets = int(kwargs.pop("assets", 2))
        if kwargs:
            raise ValueError(f"unknown brownian options: {sorted(kwargs)}")
        if assets != 2:
            raise ValueError("reporting layout currently assumes two assets")
        return Model(
            kind, assets + assets * (assets + 1) // 2,
            ("mu1", "mu2", "l11", "l21", "l22"),
            partial(_sim_brownian, steps=steps, assets=assets),
            report_names=("mu1", "mu2", "sigma11", "sigma12", "sigma22"),
            _report=_brownian_report)
    if kind == "gauss":
        sigma = np.atleast_2d(np.asarray(kwargs.pop("sigma"), dtype=float))
        if kwargs:
            raise ValueError(f"unknown gauss options: {sorted(kwargs)}")
        d = sigma.shape[0]
        return Model(kind, d, tuple(f"mu{i + 1}" for i in range(d)),
                     partial(_sim_gauss, sigma=sigma))
    raise ValueError(f"unknown model kind: {kind!r}")
