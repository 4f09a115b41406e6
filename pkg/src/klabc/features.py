"""Row-wise feature maps feeding the discriminators.

Kinds:
  raw      identity
  poly2    linear terms, squares, then pairwise interactions (i < j,
           lexicographic), giving p + p + p(p-1)/2 features
  powers3  (x, x^2, x^3) blocks, giving 3p features
  lv9      nine per-series summaries of a predator/prey row

Standardization statistics are estimated once from the training pool and
frozen; prediction-time inputs reuse them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simulators.lotka_volterra import lv_series_features

KINDS = ("raw", "poly2", "powers3", "lv9")

_STD_FLOOR = 1e-12


@dataclass(frozen=True)
class FeatureMap:
    kind: str = "raw"
    standardize: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown feature map kind: {self.kind!r}")


def expand(kind: str, rows: np.ndarray) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if kind == "raw":
        return rows
    if kind == "poly2":
        n, p = rows.shape
        blocks = [rows, rows ** 2]
        if p > 1:
            i, j = np.triu_indices(p, k=1)
            blocks.append(rows[:, i] * rows[:, j])
        return np.concatenate(blocks, axis=1)
    if kind == "powers3":
        return np.concatenate([rows, rows ** 2, rows ** 3], axis=1)
    if kind == "lv9":
        return lv_series_features(rows)
    raise ValueError(f"unknown feature map kind: {kind!r}")


@dataclass(frozen=True)
class FittedFeatureMap:
    kind: str
    mean: np.ndarray | None  # None when standardization is off
    std: np.ndarray | None

    def __call__(self, rows: np.ndarray) -> np.ndarray:
        out = expand(self.kind, rows)
        if self.mean is not None:
            out = (out - self.mean) / self.std
        return out

    @property
    def n_features(self) -> int:
        if self.mean is not None:
            return self.mean.size
        raise AttributeError("feature count unknown without frozen stats")


def fit_feature_map(fm: FeatureMap, pool_rows: np.ndarray) -> FittedFeatureMap:
    expanded = expand(fm.kind, pool_rows)
    if not fm.standardize:
        return FittedFeatureMap(fm.kind, None, None)
    mean = expanded.mean(axis=0)
    std = np.maximum(expanded.std(axis=0), _STD_FLOOR)
    return FittedFeatureMap(fm.kind, mean, std)
