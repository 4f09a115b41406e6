"""Small fully-connected discriminators trained by mini-batch Adam on the
mean-form BCE objective (real rows weighted 1/n, fake rows 1/m).

Weight initialization is Glorot-uniform and every random choice (init,
epoch shuffles) is driven by the training SeedSpec, so a fit is a pure
function of (spec, data, seed).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .features import FeatureMap, FittedFeatureMap, fit_feature_map
from .logistic import CLIP_EPS, LOGIT_CLAMP, _class_weights
from .rng import as_sampler

_ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class MLPSpec:
    featuremap: FeatureMap = FeatureMap("raw")
    hidden: Tuple[int, ...] = (10, 10)
    activations: Tuple[str, ...] = ("relu", "tanh")
    epochs: int = 200
    learning_rate: float = 1e-2
    batch_size: int = 64

    def __post_init__(self):
        if len(self.hidden) != len(self.activations) or not self.hidden:
            raise ValueError("need one activation per hidden layer")
        if any(a not in _ACTIVATIONS for a in self.activations):
            raise ValueError(f"activations must be in {_ACTIVATIONS}")
        if min(self.hidden) < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("hidden sizes, epochs, batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "activations", tuple(self.activations))


def _act(name, z):
    return np.maximum(z, 0.0) if name == "relu" else np.tanh(z)


def _act_grad(name, z, a):
    return (z > 0.0).astype(float) if name == "relu" else 1.0 - a * a


def init_params(spec: MLPSpec, n_inputs: int, sampler) -> List[np.ndarray]:
    """Glorot-uniform weights, zero biases; flat list [W1, b1, W2, b2, ...]."""
    sizes = (n_inputs,) + spec.hidden + (1,)
    params: List[np.ndarray] = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = bound * (2.0 * sampler.uniforms((fan_in, fan_out)) - 1.0)
        params.append(w)
        params.append(np.zeros(fan_out))
    return params


def _forward(params, acts, X):
    """Returns (raw logits, per-layer cache for backprop)."""
    h = X
    cache = []
    n_hidden = len(acts)
    for l in range(n_hidden):
        z = h @ params[2 * l] + params[2 * l + 1]
        a = _act(acts[l], z)
        cache.append((h, z, a))
        h = a
    logits = (h @ params[2 * n_hidden] + params[2 * n_hidden + 1]).ravel()
    cache.append((h, None, None))
    return logits, cache


def bce_loss_and_grad(params, acts: Sequence[str], X, y, v):
    """Mean-form BCE loss and its gradient w.r.t. every parameter array.

    loss = sum_i v_i [softplus(s_i) - y_i s_i]; with v = (1/n, 1/m) class
    weights this equals the negated objective the discriminator maximizes.
    """
    logits, cache = _forward(params, acts, X)
    loss = float(np.sum(v * (np.logaddexp(0.0, logits) - y * logits)))
    p = 1.0 / (1.0 + np.exp(-np.clip(logits, -500, 500)))
    dlogits = (v * (p - y))[:, None]

    grads = [np.zeros_like(q) for q in params]
    n_hidden = len(acts)
    h_last = cache[-1][0]
    grads[2 * n_hidden] = h_last.T @ dlogits
    grads[2 * n_hidden + 1] = dlogits.sum(axis=0)
    delta = dlogits @ params[2 * n_hidden].T
    for l in range(n_hidden - 1, -1, -1):
        h, z, a = cache[l]
        delta = delta * _act_grad(acts[l], z, a)
        grads[2 * l] = h.T @ delta
        grads[2 * l + 1] = delta.sum(axis=0)
        if l > 0:
            delta = delta @ params[2 * l].T
    return loss, grads


@dataclass(frozen=True)
class TrainedMLP:
    featuremap: FittedFeatureMap
    params: tuple
    activations: tuple
    clip_eps: float = CLIP_EPS
    warn: bool = False

    def raw_logit(self, rows) -> np.ndarray:
        logits, _ = _forward(list(self.params), self.activations,
                             self.featuremap(rows))
        return logits

    def logit(self, rows) -> np.ndarray:
        return np.clip(self.raw_logit(rows), -LOGIT_CLAMP, LOGIT_CLAMP)

    def prob(self, rows) -> np.ndarray:
        p = 1.0 / (1.0 + np.exp(-self.logit(rows)))
        return np.clip(p, self.clip_eps, 1.0 - self.clip_eps)


def train_mlp(spec: MLPSpec, real_rows, fake_rows, seed) -> TrainedMLP:
    real_rows = np.atleast_2d(np.asarray(real_rows, dtype=float))
    fake_rows = np.atleast_2d(np.asarray(fake_rows, dtype=float))
    n, m = real_rows.shape[0], fake_rows.shape[0]
    if n < 2 or m < 2:
        raise ValueError("need at least two rows per class")
    sampler = as_sampler(seed)

    pool = np.vstack([real_rows, fake_rows])
    if not np.all(np.isfinite(pool)):
        raise ValueError("training pool contains non-finite rows")
    fm = fit_feature_map(spec.featuremap, pool)
    X = fm(pool)
    y = np.concatenate([np.ones(n), np.zeros(m)])
    v = _class_weights(y)
    total = n + m

    params = init_params(spec, X.shape[1], sampler)
    m1 = [np.zeros_like(q) for q in params]
    m2 = [np.zeros_like(q) for q in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0
    batch = min(spec.batch_size, total)
    for _ in range(spec.epochs):
        order = sampler.permutation(total)
        for start in range(0, total, batch):
            idx = order[start:start + batch]
            scale = total / idx.size
            _, grads = bce_loss_and_grad(params, spec.activations,
                                         X[idx], y[idx], v[idx] * scale)
            step += 1
            c1 = 1.0 - beta1 ** step
            c2 = 1.0 - beta2 ** step
            for q, g, u1, u2 in zip(params, grads, m1, m2):
                u1 *= beta1
                u1 += (1.0 - beta1) * g
                u2 *= beta2
                u2 += (1.0 - beta2) * g * g
                q -= spec.learning_rate * (u1 / c1) / (np.sqrt(u2 / c2) + eps)

    return TrainedMLP(featuremap=fm, params=tuple(params),
                      activations=spec.activations)
