"""Likelihood-free Bayesian inference with classifier-based KL discrepancies.

The package builds ABC posteriors by comparing observed and simulated
datasets through a discrepancy metric -- most importantly a Kullback-Leibler
estimate read off a binary classifier's logits -- and aggregating proposals
with either an adaptive accept/reject threshold or exponential weighting.
"""

__version__ = "0.1.0"

from .data import Dataset
from .discrepancy import (Discrepancy, aux_likelihood, classification_accuracy,
                          classifier_kl, classifier_kl_reversed, knn_kl,
                          summary_l2, wasserstein2)
from .engine import (ABCConfig, AcceptRejectKernel, ExponentialKernel,
                     ReferenceTable, accept_reject, build_reference_table,
                     effective_sample_size, exponential_weights)
from .evaluation import (kl_grid, summarize, weighted_mean, weighted_quantile)
from .rng import SeedSpec, StreamSampler, derive_stream

__all__ = [
    "__version__", "Dataset", "SeedSpec", "StreamSampler", "derive_stream",
    "Discrepancy", "classifier_kl", "classifier_kl_reversed",
    "classification_accuracy", "knn_kl", "wasserstein2", "summary_l2",
    "aux_likelihood", "ABCConfig", "AcceptRejectKernel", "ExponentialKernel",
    "ReferenceTable", "build_reference_table", "accept_reject",
    "exponential_weights", "effective_sample_size", "kl_grid", "summarize",
    "weighted_mean", "weighted_quantile",
]
