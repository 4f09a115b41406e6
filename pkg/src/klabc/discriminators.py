"""Discriminator dispatch: one entry point for training binary classifiers
that separate real rows (label 1) from simulated rows (label 0).

A trained discriminator exposes ``prob(rows)`` (clipped to
[clip_eps, 1 - clip_eps]) and ``logit(rows)`` = log(D / (1 - D)).
"""

from __future__ import annotations

from typing import Union

from .features import FeatureMap
from .logistic import L1LogisticSpec, TrainedLogistic, train_l1_logistic
from .mlp import MLPSpec, TrainedMLP, train_mlp

DiscriminatorSpec = Union[L1LogisticSpec, MLPSpec]
TrainedDiscriminator = Union[TrainedLogistic, TrainedMLP]


def train_discriminator(spec: DiscriminatorSpec, real_rows, fake_rows,
                        seed) -> TrainedDiscriminator:
    if isinstance(spec, L1LogisticSpec):
        return train_l1_logistic(spec, real_rows, fake_rows, seed)
    if isinstance(spec, MLPSpec):
        return train_mlp(spec, real_rows, fake_rows, seed)
    raise TypeError(f"unknown discriminator spec: {type(spec).__name__}")


def logistic_quadratic(**kwargs) -> L1LogisticSpec:
    """Lasso logistic regression on degree-2 polynomial features."""
    return L1LogisticSpec(featuremap=FeatureMap("poly2"), **kwargs)


def mlp_three_hidden(**kwargs) -> MLPSpec:
    """Raw input -> 10 relu -> 10 tanh -> 10 tanh -> logit."""
    return MLPSpec(featuremap=FeatureMap("raw"), hidden=(10, 10, 10),
                   activations=("relu", "tanh", "tanh"), **kwargs)


def mlp_quadratic_input(**kwargs) -> MLPSpec:
    """Degree-2 polynomial input -> 10 relu -> 10 tanh -> logit."""
    return MLPSpec(featuremap=FeatureMap("poly2"), hidden=(10, 10),
                   activations=("relu", "tanh"), **kwargs)


def mlp_cubic_input(**kwargs) -> MLPSpec:
    """(x, x^2, x^3) input -> 10 relu -> 10 tanh -> logit."""
    return MLPSpec(featuremap=FeatureMap("powers3"), hidden=(10, 10),
                   activations=("relu", "tanh"), **kwargs)
