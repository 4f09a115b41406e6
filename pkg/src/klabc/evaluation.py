"""Weighted posterior summaries and the grid/repetition harnesses.

Quantiles use the left-continuous weighted inverse CDF (smallest value whose
cumulative weight reaches p) with no interpolation, which stays well defined
when exponential weights concentrate on a handful of proposals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .data import Dataset
from .discrepancy import Discrepancy
from .engine import ReferenceTable
from .rng import PURPOSE_FAKE, PURPOSE_GRID, derive_stream

# Tolerance on cumulative weights: protects the quantile rule against the
# float error of summing N nominally-equal weights.
_CUM_TOL = 1e-9


def weighted_mean(values, weights) -> float:
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    return float(np.sum(weights * values))


def weighted_quantile(values, weights, p: float) -> float:
    if not 0 < p < 1:
        raise ValueError("quantile level must be in (0, 1)")
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    idx = int(np.searchsorted(cum, p - _CUM_TOL, side="left"))
    idx = min(idx, values.size - 1)
    return float(values[order][idx])


@dataclass(frozen=True)
class PosteriorSummary:
    names: tuple
    mean: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    sq_error: Optional[np.ndarray] = None
    covered: Optional[np.ndarray] = None

    @property
    def ci_width(self) -> np.ndarray:
        return self.ci_high - self.ci_low


def summarize(table: ReferenceTable, truth=None, transform=None,
              ci_level: float = 0.95) -> PosteriorSummary:
    """Per-coordinate weighted mean and central credible interval.

    transform(thetas) -> (names, values) maps raw parameters to reported
    coordinates; truth is given in reported coordinates.
    """
    if transform is not None:
        names, values = transform(table.thetas)
    else:
        values = table.thetas
        names = tuple(f"theta_{i + 1}" for i in range(values.shape[1]))
    lo_p = (1.0 - ci_level) / 2.0
    hi_p = 1.0 - lo_p
    k = values.shape[1]
    mean = np.empty(k)
    lo = np.empty(k)
    hi = np.empty(k)
    for i in range(k):
        mean[i] = weighted_mean(values[:, i], table.weights)
        lo[i] = weighted_quantile(values[:, i], table.weights, lo_p)
        hi[i] = weighted_quantile(values[:, i], table.weights, hi_p)
    sq_error = covered = None
    if truth is not None:
        truth = np.asarray(truth, dtype=float).ravel()
        if truth.size != k:
            raise ValueError("truth length does not match reported coordinates")
        sq_error = (mean - truth) ** 2
        covered = (lo <= truth) & (truth <= hi)
    return PosteriorSummary(tuple(names), mean, lo, hi, sq_error, covered)


# ---------------------------------------------------------------------------
# discrepancy surface over a parameter grid

@dataclass(frozen=True)
class GridResult:
    axes: tuple          # ((coord index, axis values), ...)
    nodes: np.ndarray    # (n_nodes, d) full parameter per node, row-major
    khat: np.ndarray     # (n_nodes,)
    flags: np.ndarray    # (n_nodes,) truncated fake rows per node

    @property
    def khat_rescaled(self) -> np.ndarray:
        return self.khat - self.khat.min()

    def argmin_node(self) -> np.ndarray:
        return self.nodes[int(np.argmin(self.khat))]


def kl_grid(real: Dataset, model, axes: Sequence, fixed,
            discrepancy: Discrepancy, master_seed: int, nlatent: int = 1,
            m_ratio: float = 1.0) -> GridResult:
    """Evaluate the discrepancy at every grid node with a shared latent
    bundle.

    axes: sequence of (coordinate index, 1-d array of values); remaining
    coordinates are held at ``fixed``.  Nodes enumerate the cartesian
    product in row-major order.
    """
    fixed = np.asarray(fixed, dtype=float).ravel()
    axes = tuple((int(c), np.asarray(v, dtype=float).ravel())
                 for c, v in axes)
    m = max(2, int(round(m_ratio * real.n)))
    grids = np.meshgrid(*[v for _, v in axes], indexing="ij")
    coords = np.column_stack([g.ravel() for g in grids])
    n_nodes = coords.shape[0]
    nodes = np.tile(fixed, (n_nodes, 1))
    for k, (c, _) in enumerate(axes):
        nodes[:, c] = coords[:, k]
    khat = np.empty(n_nodes)
    flags = np.zeros(n_nodes, dtype=int)
    for i in range(n_nodes):
        vals = np.empty(nlatent)
        for l in range(nlatent):
            fake, nflag = model.simulate(
                nodes[i], m, derive_stream(master_seed, PURPOSE_FAKE, l))
            flags[i] += nflag
            vals[l] = discrepancy.evaluate(
                real, fake.rows,
                derive_stream(master_seed, PURPOSE_GRID, i * nlatent + l))
        khat[i] = vals.mean()
    return GridResult(axes=axes, nodes=nodes, khat=khat, flags=flags)
