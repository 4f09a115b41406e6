"""Dataset container and on-disk format.

A dataset is an n x p matrix of i.i.d. observation rows.  On disk it is a
headerless CSV, one row per observation, written with 17 significant digits
so that save/load round-trips are bit exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

# 17 significant digits round-trip IEEE doubles exactly.
FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class Dataset:
    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim == 1:
            rows = rows[:, None]
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise ValueError("dataset must be a non-empty 2-d array")
        if not np.all(np.isfinite(rows)):
            raise ValueError("dataset contains non-finite entries")
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def p(self) -> int:
        return self.rows.shape[1]

    def save(self, path) -> None:
        np.savetxt(path, self.rows, fmt=FLOAT_FMT, delimiter=",")

    @classmethod
    def load(cls, path) -> "Dataset":
        rows = np.loadtxt(Path(path), delimiter=",", ndmin=2)
        return cls(rows)


def check_param_vector(theta, d: int | None = None) -> np.ndarray:
    """Validate a parameter point: finite 1-d float vector of length d."""
    theta = np.asarray(theta, dtype=float).ravel()
    if not np.all(np.isfinite(theta)):
        raise ValueError("parameter vector contains non-finite entries")
    if d is not None and theta.size != d:
        raise ValueError(f"expected parameter dimension {d}, got {theta.size}")
    return theta
