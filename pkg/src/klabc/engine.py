"""Reference-table construction and the two aggregation kernels.

The table holds one row per proposed parameter: the proposal, its
discrepancy value for each latent bundle, the bundle mean, and the kernel
weight.  Latent bundles are pseudo-random streams drawn once per run and
reused for every proposal (common random numbers): fake data for bundle l
always comes from stream (master_seed, fake, l), so two equal proposals see
identical fake datasets.

Kernels:
  accept/reject  keep the ceil(qN) proposals with the smallest bundle-mean
                 discrepancy (the adaptive threshold), uniform weights;
  exponential    weight every proposal by exp(-scale * discrepancy),
                 normalized in log space.

Proposal evaluations are independent; with threads > 1 they run in worker
processes and the result is identical to the serial order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from typing import Optional, Union

import numpy as np

from .data import FLOAT_FMT, Dataset
from .discrepancy import Discrepancy
from .rng import PURPOSE_FAKE, PURPOSE_PRIOR, PURPOSE_TRAIN, derive_stream


@dataclass(frozen=True)
class AcceptRejectKernel:
    q: float  # accepted fraction, 0 < q <= 1

    def __post_init__(self):
        if not 0 < self.q <= 1:
            raise ValueError("accept fraction q must be in (0, 1]")


@dataclass(frozen=True)
class ExponentialKernel:
    scale: Optional[float] = None  # None: use the observed sample size n
    aggregation: str = "mean_khat"  # or "mean_exp"

    def __post_init__(self):
        if self.scale is not None and self.scale <= 0:
            raise ValueError("exponential kernel scale must be positive")
        if self.aggregation not in ("mean_khat", "mean_exp"):
            raise ValueError("aggregation must be 'mean_khat' or 'mean_exp'")


Kernel = Union[AcceptRejectKernel, ExponentialKernel]


@dataclass(frozen=True)
class ABCConfig:
    n_proposals: int
    master_seed: int
    kernel: Kernel
    m_ratio: float = 3.0
    nlatent: int = 10

    def __post_init__(self):
        if self.n_proposals < 1:
            raise ValueError("n_proposals must be >= 1")
        if self.m_ratio <= 0:
            raise ValueError("m_ratio must be positive")
        if self.nlatent < 1:
            raise ValueError("nlatent must be >= 1")


@dataclass(frozen=True)
class ReferenceTable:
    thetas: np.ndarray   # (N, d)
    khats: np.ndarray    # (N, nlatent)
    weights: np.ndarray  # (N,), normalized
    accepted: np.ndarray  # (N,) bool
    flags: np.ndarray    # (N,) int, truncated fake rows per proposal
    epsilon: Optional[float] = None  # accept/reject threshold actually used

    @property
    def n(self) -> int:
        return self.thetas.shape[0]

    @property
    def nlatent(self) -> int:
        return self.khats.shape[1]

    @property
    def khat_mean(self) -> np.ndarray:
        return self.khats.mean(axis=1)

    def save(self, path) -> None:
        d = self.thetas.shape[1]
        L = self.nlatent
        header = ",".join(
            ["j"] + [f"theta_{i + 1}" for i in range(d)]
            + [f"khat_{l + 1}" for l in range(L)]
            + ["khat_mean", "weight", "accepted", "flags"])
        body = np.column_stack([
            np.arange(self.n, dtype=float), self.thetas, self.khats,
            self.khat_mean, self.weights, self.accepted.astype(float),
            self.flags.astype(float)])
        fmt = (["%d"] + [FLOAT_FMT] * (d + L + 2) + ["%d", "%d"])
        np.savetxt(path, body, fmt=fmt, delimiter=",", header=header,
                   comments="")

    @classmethod
    def load(cls, path) -> "ReferenceTable":
        with open(path) as fh:
            header = fh.readline().strip()
        cols = header.split(",")
        required = ("j", "theta_1", "khat_1", "khat_mean", "weight",
                    "accepted", "flags")
        for name in required:
            if name not in cols:
                raise ValueError(f"reference table is missing column {name!r}")
        d = sum(c.startswith("theta_") for c in cols)
        L = sum(c.startswith("khat_") and c != "khat_mean" for c in cols)
        body = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if body.shape[1] != len(cols):
            raise ValueError("reference table rows disagree with the header")
        thetas = body[:, 1:1 + d]
        khats = body[:, 1 + d:1 + d + L]
        weights = body[:, 1 + d + L + 1]
        accepted = body[:, 1 + d + L + 2] != 0
        flags = body[:, 1 + d + L + 3].astype(int)
        return cls(thetas=thetas, khats=khats, weights=weights,
                   accepted=accepted, flags=flags)


def _eval_chunk(ctx, js):
    (master_seed, m, nlatent, sample_prior, model, discrepancy, real) = ctx
    out = []
    for j in js:
        theta = sample_prior(derive_stream(master_seed, PURPOSE_PRIOR, j))
        khats = np.empty(nlatent)
        flagged = 0
        for l in range(nlatent):
            fake, nflag = model.simulate(
                theta, m, derive_stream(master_seed, PURPOSE_FAKE, l))
            flagged += nflag
            khats[l] = discrepancy.evaluate(
                real, fake.rows,
                derive_stream(master_seed, PURPOSE_TRAIN, j * nlatent + l))
        out.append((theta, khats, flagged))
    return out


def fake_sample_size(m_ratio: float, n_real: int) -> int:
    return max(2, int(round(m_ratio * n_real)))


def build_reference_table(cfg: ABCConfig, sample_prior, model, real: Dataset,
                          discrepancy: Discrepancy,
                          threads: int = 1) -> ReferenceTable:
    """Run the proposal loop and apply the configured kernel.

    sample_prior(SeedSpec) -> theta.  The result depends only on cfg and the
    inputs, never on ``threads``.
    """
    m = fake_sample_size(cfg.m_ratio, real.n)
    ctx = (cfg.master_seed, m, cfg.nlatent, sample_prior, model, discrepancy,
           real.rows)
    js = np.arange(cfg.n_proposals)
    if threads > 1 and cfg.n_proposals > 1:
        n_chunks = min(cfg.n_proposals, threads * 8)
        chunks = np.array_split(js, n_chunks)
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = [row for part in pool.map(partial(_eval_chunk, ctx),
                                                chunks)
                       for row in part]
    else:
        results = _eval_chunk(ctx, js)

    thetas = np.array([r[0] for r in results])
    khats = np.array([r[1] for r in results])
    flags = np.array([r[2] for r in results], dtype=int)
    table = ReferenceTable(
        thetas=thetas, khats=khats,
        weights=np.full(cfg.n_proposals, 1.0 / cfg.n_proposals),
        accepted=np.ones(cfg.n_proposals, dtype=bool), flags=flags)
    return apply_kernel(table, cfg.kernel, n_real=real.n,
                        discrepancy=discrepancy)


def apply_kernel(table: ReferenceTable, kernel: Kernel, n_real: int = None,
                 discrepancy: Discrepancy = None) -> ReferenceTable:
    if isinstance(kernel, AcceptRejectKernel):
        return accept_reject(table, kernel.q)
    scale = kernel.scale
    if scale is None:
        if n_real is None:
            raise ValueError("exponential kernel needs a scale or n_real")
        scale = float(n_real)
    return exponential_weights(table, scale, aggregation=kernel.aggregation,
                               discrepancy=discrepancy)


def accept_reject(table: ReferenceTable, q: float) -> ReferenceTable:
    """Adaptive threshold: keep the ceil(qN) smallest bundle means, ties
    broken toward the lower proposal index."""
    if not 0 < q <= 1:
        raise ValueError("accept fraction q must be in (0, 1]")
    n = table.n
    k = int(np.ceil(q * n))
    if k < 1:
        raise ValueError("q * N < 1: nothing would be accepted")
    km = table.khat_mean
    order = np.lexsort((np.arange(n), km))
    accepted = np.zeros(n, dtype=bool)
    accepted[order[:k]] = True
    weights = accepted / float(k)
    return replace(table, weights=weights, accepted=accepted,
                   epsilon=float(km[order[k - 1]]))


def exponential_weights(table: ReferenceTable, scale: float,
                        aggregation: str = "mean_khat",
                        discrepancy: Discrepancy = None) -> ReferenceTable:
    """w_j proportional to exp(-scale * khat_mean_j), normalized in log
    space so extreme values never overflow.

    aggregation="mean_exp" instead averages exp(-scale * khat) over the
    latent bundles before normalizing.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    vals = table.khats
    if discrepancy is not None:
        vals = np.asarray(discrepancy.to_exponent(vals), dtype=float)
    if aggregation == "mean_khat":
        logw = -scale * vals.mean(axis=1)
    elif aggregation == "mean_exp":
        a = -scale * vals
        amax = a.max(axis=1, keepdims=True)
        logw = (amax.ravel()
                + np.log(np.exp(a - amax).mean(axis=1)))
    else:
        raise ValueError("aggregation must be 'mean_khat' or 'mean_exp'")
    logw -= logw.max()
    w = np.exp(logw)
    w /= w.sum()
    return replace(table, weights=w, accepted=np.ones(table.n, dtype=bool),
                   epsilon=None)


def effective_sample_size(weights) -> float:
    w = np.asarray(weights, dtype=float)
    return float(1.0 / np.sum(w * w))
