"""Discrepancy metrics between an observed and a simulated dataset.

All metrics map (real rows, fake rows) to a scalar where smaller means the
datasets are harder to tell apart (classification accuracy is kept on its
natural [0, 1] scale; 0.5 is the indistinguishable point and larger is
worse).

The classifier-based family trains a fresh discriminator per call: the KL
estimate is the mean logit over real rows, the reversed KL the mean negated
logit over fake rows, and the accuracy the soft count of correct
probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .data import Dataset
from .discriminators import DiscriminatorSpec, train_discriminator
from .features import expand
from .rng import PURPOSE_PILOT, as_sampler, derive_stream

KNN_DISTANCE_FLOOR = 1e-12
W2_MAX_EXACT = 2000
KINDS = ("classifier_kl", "classifier_kl_reverse", "classifier_accuracy",
         "knn_kl", "wasserstein2", "summary_l2", "semi_auto",
         "aux_likelihood")


def _rows(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.rows
    return np.atleast_2d(np.asarray(data, dtype=float))


# ---------------------------------------------------------------------------
# classifier-based estimates

def kl_from_logits(real_logits) -> float:
    """Forward KL estimate: mean of log(D/(1-D)) over real rows."""
    return float(np.mean(real_logits))


def reversed_kl_from_logits(fake_logits) -> float:
    """Reversed KL estimate: mean of log((1-D)/D) over fake rows."""
    return float(np.mean(-np.asarray(fake_logits)))


def classifier_kl(real, fake, spec: DiscriminatorSpec, seed) -> float:
    real, fake = _rows(real), _rows(fake)
    disc = train_discriminator(spec, real, fake, seed)
    return kl_from_logits(disc.logit(real))


def classifier_kl_reversed(real, fake, spec: DiscriminatorSpec, seed) -> float:
    real, fake = _rows(real), _rows(fake)
    disc = train_discriminator(spec, real, fake, seed)
    return reversed_kl_from_logits(disc.logit(fake))


def soft_accuracy(real_probs, fake_probs) -> float:
    """(sum D(real) + sum (1 - D(fake))) / (n + m)."""
    real_probs = np.asarray(real_probs)
    fake_probs = np.asarray(fake_probs)
    total = real_probs.sum() + (1.0 - fake_probs).sum()
    return float(total / (real_probs.size + fake_probs.size))


def classification_accuracy(real, fake, spec: DiscriminatorSpec, seed) -> float:
    real, fake = _rows(real), _rows(fake)
    disc = train_discriminator(spec, real, fake, seed)
    return soft_accuracy(disc.prob(real), disc.prob(fake))


def heldout_accuracy(real, fake, spec: DiscriminatorSpec, seed,
                     holdout: float = 0.25) -> float:
    """Soft accuracy on a held-out split (train on the rest)."""
    real, fake = _rows(real), _rows(fake)
    sampler = as_sampler(seed)
    n_ho_r = max(1, int(round(holdout * real.shape[0])))
    n_ho_f = max(1, int(round(holdout * fake.shape[0])))
    perm_r = sampler.permutation(real.shape[0])
    perm_f = sampler.permutation(fake.shape[0])
    disc = train_discriminator(spec, real[perm_r[n_ho_r:]],
                               fake[perm_f[n_ho_f:]], sampler)
    return soft_accuracy(disc.prob(real[perm_r[:n_ho_r]]),
                         disc.prob(fake[perm_f[:n_ho_f]]))


# ---------------------------------------------------------------------------
# nearest-neighbour KL estimate

def knn_kl(real, fake) -> float:
    """1-nearest-neighbour Kullback-Leibler estimate,

        (d/n) sum_i log(nn_fake_i / nn_real_i) + log(m / (n - 1)),

    where nn_fake_i is the distance from real row i to the nearest fake row
    and nn_real_i to its nearest other real row.  Distances are floored so
    duplicates stay finite.
    """
    real, fake = _rows(real), _rows(fake)
    n, d = real.shape
    m = fake.shape[0]
    if n < 2:
        raise ValueError("knn_kl needs at least two real rows")
    if fake.shape[1] != d:
        raise ValueError("datasets must share the column dimension")
    nn_fake = cKDTree(fake).query(real, k=1)[0]
    nn_real = cKDTree(real).query(real, k=2)[0][:, 1]
    ratio = (np.maximum(nn_fake, KNN_DISTANCE_FLOOR)
             / np.maximum(nn_real, KNN_DISTANCE_FLOOR))
    return float(d / n * np.sum(np.log(ratio)) + np.log(m / (n - 1)))


# ---------------------------------------------------------------------------
# exact Wasserstein

def _replicate(rows: np.ndarray, times: int) -> np.ndarray:
    return np.repeat(rows, times, axis=0)


def wasserstein2(real, fake) -> float:
    """Exact W2-style matching value sqrt(min_pi sum_i ||x_i - y_pi(i)||^2).

    Univariate inputs use the monotone (sorted) coupling; multivariate inputs
    solve the assignment problem exactly.  Unequal sizes are replicated to
    the least common multiple before matching.
    """
    real, fake = _rows(real), _rows(fake)
    if real.shape[1] != fake.shape[1]:
        raise ValueError("datasets must share the column dimension")
    n, m = real.shape[0], fake.shape[0]
    if n != m:
        common = np.lcm(n, m)
        if common > W2_MAX_EXACT:
            raise ValueError(
                f"replicated size {common} exceeds the exact-solver cap "
                f"{W2_MAX_EXACT}; use matching sample sizes")
        real = _replicate(real, common // n)
        fake = _replicate(fake, common // m)
        n = m = common
    if n > W2_MAX_EXACT:
        raise ValueError(f"exact solver capped at {W2_MAX_EXACT} rows")
    if real.shape[1] == 1:
        diff = np.sort(real[:, 0]) - np.sort(fake[:, 0])
        return float(np.sqrt(np.sum(diff * diff)))
    cost = cdist(real, fake, metric="sqeuclidean")
    rows, cols = linear_sum_assignment(cost)
    return float(np.sqrt(cost[rows, cols].sum()))


# ---------------------------------------------------------------------------
# summary-statistic distances

SummaryFn = Callable[[np.ndarray], np.ndarray]


def _feature_mean(rows, kind: str) -> np.ndarray:
    return expand(kind, rows).mean(axis=0)


def feature_mean_summary(kind: str) -> SummaryFn:
    """Dataset-level summary: mean of the expanded rows (picklable)."""
    from functools import partial
    return partial(_feature_mean, kind=kind)


def summary_l2(real, fake, summaries: Sequence[SummaryFn]) -> float:
    real, fake = _rows(real), _rows(fake)
    s_real = np.concatenate([np.atleast_1d(f(real)) for f in summaries])
    s_fake = np.concatenate([np.atleast_1d(f(fake)) for f in summaries])
    if s_real.shape != s_fake.shape:
        raise ValueError("summaries disagree in length between datasets")
    return float(np.linalg.norm(s_real - s_fake))


# ---------------------------------------------------------------------------
# semi-automatic summaries (pilot regression of parameters on features)

@dataclass(frozen=True)
class SemiAutoSummary:
    """Linear map from dataset feature means to a parameter prediction,
    fitted once on a pilot run and then frozen."""

    kind: str
    intercept: np.ndarray
    coef: np.ndarray  # (n_features, d)
    pilot_size: int

    def predict(self, rows) -> np.ndarray:
        phi = expand(self.kind, _rows(rows)).mean(axis=0)
        return self.intercept + phi @ self.coef


def fit_semi_auto(thetas, features, kind: str,
                  ridge: float = 1e-6) -> SemiAutoSummary:
    """Least-squares fit theta ~ c + B phi; ridge fallback if rank deficient."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    phi = np.atleast_2d(np.asarray(features, dtype=float))
    design = np.column_stack([np.ones(phi.shape[0]), phi])
    coef, _, rank, _ = np.linalg.lstsq(design, thetas, rcond=None)
    if rank < design.shape[1]:
        phi_mean = phi.mean(axis=0)
        theta_mean = thetas.mean(axis=0)
        pc = phi - phi_mean
        gram = pc.T @ pc + ridge * np.eye(phi.shape[1])
        slopes = np.linalg.solve(gram, pc.T @ (thetas - theta_mean))
        intercept = theta_mean - phi_mean @ slopes
        return SemiAutoSummary(kind, intercept, slopes, phi.shape[0])
    return SemiAutoSummary(kind, coef[0], coef[1:], phi.shape[0])


def fit_semi_auto_pilot(simulate, sample_prior, n_pilot: int, kind: str,
                        master_seed: int) -> SemiAutoSummary:
    """Run the pilot: draw thetas, simulate datasets, regress.

    simulate(theta, seed) -> rows; sample_prior(seed) -> theta.  Streams are
    derived from the pilot purpose so the pilot never perturbs the main run.
    """
    thetas = []
    feats = []
    for j in range(n_pilot):
        theta = sample_prior(derive_stream(master_seed, PURPOSE_PILOT, 2 * j))
        rows = _rows(simulate(theta,
                              derive_stream(master_seed, PURPOSE_PILOT,
                                            2 * j + 1)))
        thetas.append(theta)
        feats.append(expand(kind, rows).mean(axis=0))
    return fit_semi_auto(np.array(thetas), np.array(feats), kind)


def semi_auto_distance(summary: SemiAutoSummary, real, fake) -> float:
    return float(np.linalg.norm(summary.predict(real) - summary.predict(fake)))


# ---------------------------------------------------------------------------
# auxiliary Gaussian likelihood

def _plugin_moments(rows: np.ndarray):
    mean = rows.mean(axis=0)
    dev = rows - mean
    cov = dev.T @ dev / rows.shape[0]  # MLE normalization
    return mean, cov


def _mean_gaussian_loglik(rows, mean, cov, ridge: float = 1e-8) -> float:
    d = rows.shape[1]
    try:
        factor = cho_factor(cov, lower=True)
    except np.linalg.LinAlgError:
        try:
            factor = cho_factor(cov + ridge * np.eye(d), lower=True)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance singular even after ridge") from exc
    dev = rows - mean
    quad = np.einsum("ij,ij->i", dev, cho_solve(factor, dev.T).T)
    logdet = 2.0 * np.sum(np.log(np.diag(factor[0])))
    return float(np.mean(-0.5 * (d * np.log(2.0 * np.pi) + logdet + quad)))


def aux_likelihood(real, fake) -> float:
    """Gaussian auxiliary-likelihood gap

        (1/m) ln p_A(fake | moments(fake)) - (1/m) ln p_A(fake | moments(real)),

    nonnegative because the fake data's own moments are its Gaussian MLE.
    """
    real, fake = _rows(real), _rows(fake)
    mean_f, cov_f = _plugin_moments(fake)
    mean_r, cov_r = _plugin_moments(real)
    return (_mean_gaussian_loglik(fake, mean_f, cov_f)
            - _mean_gaussian_loglik(fake, mean_r, cov_r))


# ---------------------------------------------------------------------------
# engine-facing wrapper

@dataclass(frozen=True)
class Discrepancy:
    """One configured metric: evaluate(real, fake, seed) -> scalar.

    ``to_exponent`` maps the recorded value to the exponent used by the
    exponential kernel; for classification accuracy that is 2 * (CA - 0.5)
    clamped at zero, for everything else the value itself.
    """

    kind: str
    discriminator: Optional[DiscriminatorSpec] = None
    summaries: Optional[Tuple[SummaryFn, ...]] = None
    semi_auto: Optional[SemiAutoSummary] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown discrepancy kind: {self.kind!r}")
        needs_disc = self.kind.startswith("classifier")
        if needs_disc and self.discriminator is None:
            raise ValueError(f"{self.kind} requires a discriminator spec")
        if self.kind == "summary_l2" and not self.summaries:
            raise ValueError("summary_l2 requires summary functions")
        if self.kind == "semi_auto" and self.semi_auto is None:
            raise ValueError("semi_auto requires a fitted pilot summary")

    def evaluate(self, real, fake, seed) -> float:
        if self.kind == "classifier_kl":
            return classifier_kl(real, fake, self.discriminator, seed)
        if self.kind == "classifier_kl_reverse":
            return classifier_kl_reversed(real, fake, self.discriminator, seed)
        if self.kind == "classifier_accuracy":
            return classification_accuracy(real, fake, self.discriminator, seed)
        if self.kind == "knn_kl":
            return knn_kl(real, fake)
        if self.kind == "wasserstein2":
            return wasserstein2(real, fake)
        if self.kind == "summary_l2":
            return summary_l2(real, fake, self.summaries)
        if self.kind == "semi_auto":
            return semi_auto_distance(self.semi_auto, real, fake)
        if self.kind == "aux_likelihood":
            return aux_likelihood(real, fake)
        raise AssertionError(self.kind)

    def to_exponent(self, value):
        if self.kind == "classifier_accuracy":
            return 2.0 * np.maximum(np.asarray(value, dtype=float) - 0.5, 0.0)
        return value
