"""Deterministic stream derivation and the basic samplers.

Every random quantity in the package is drawn from a stream identified by a
``SeedSpec``: a (master_seed, stream_id) pair fed into a counter-based
generator.  Streams are derived, never split at runtime, so results are
independent of evaluation order and thread count.

Gaussian and exponential variates are produced by inverse-transform from the
uniform stream (one uniform per variate), so the position of every draw in
the stream is predictable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

# Purpose tags for derive_stream.  Values are part of the reproducibility
# contract: changing them changes every downstream result.
PURPOSE_DATA = 0    # observed-data generation in synthetic experiments
PURPOSE_PRIOR = 1   # prior draw for proposal j
PURPOSE_FAKE = 2    # latent bundle l, shared across all proposals
PURPOSE_TRAIN = 3   # discriminator training for (proposal, bundle)
PURPOSE_PILOT = 4   # pilot run for semi-automatic summaries
PURPOSE_REP = 5     # per-repetition reseeding
PURPOSE_GRID = 6    # grid-evaluation training seeds

_MAX_PURPOSE = 1 << 8
_MAX_INDEX = 1 << 56

# Smallest uniform admitted into ndtri / log; keeps every transform finite.
_U_FLOOR = 2.0 ** -55


@dataclass(frozen=True)
class SeedSpec:
    """Identifier of one pseudo-random stream.

    The pair (master_seed, stream_id) is hashed by numpy's SeedSequence, so
    distinct pairs give statistically independent PCG64 streams.
    """

    master_seed: int
    stream_id: int

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.master_seed,
                                    spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))

    def sampler(self) -> "StreamSampler":
        return StreamSampler(self.generator())


def derive_stream(master_seed: int, purpose_tag: int, index: int) -> SeedSpec:
    """Map (purpose_tag, index) to a stream id, injectively.

    The packing (purpose << 56) | index guarantees distinct inputs yield
    distinct streams; statistical independence between streams comes from the
    SeedSequence hashing inside ``SeedSpec.generator``.
    """
    if not 0 <= purpose_tag < _MAX_PURPOSE:
        raise ValueError(f"purpose_tag must be in [0, {_MAX_PURPOSE})")
    if not 0 <= index < _MAX_INDEX:
        raise ValueError(f"index must be in [0, 2**56)")
    return SeedSpec(int(master_seed), (int(purpose_tag) << 56) | int(index))


def derive_master(master_seed: int, purpose_tag: int, index: int) -> int:
    """Derive a fresh 64-bit master seed (used to reseed repetitions).

    Runs the packed words through SplitMix64 so derived masters are spread
    over the full 64-bit range.
    """
    spec = derive_stream(master_seed, purpose_tag, index)
    mask = (1 << 64) - 1
    z = (spec.master_seed * 0x9E3779B97F4A7C15 + spec.stream_id) & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return (z ^ (z >> 31)) & mask


def gaussian_from_uniform(u):
    """Standard-normal quantile transform, z = Phi^{-1}(u)."""
    return ndtri(u)


def exponential_from_uniform(u, rate: float):
    """Inverse-transform exponential, -ln(u) / rate."""
    return -np.log(u) / rate


class StreamSampler:
    """Uniform, Gaussian and exponential draws from a single stream.

    All three families consume exactly one uniform per variate, in call
    order, so replaying the SeedSpec reproduces the byte-identical sequence.
    """

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def uniforms(self, shape=None) -> np.ndarray:
        return self.rng.random(shape)

    def gaussians(self, shape=None) -> np.ndarray:
        u = np.maximum(self.rng.random(shape), _U_FLOOR)
        return gaussian_from_uniform(u)

    def exponentials(self, rate: float, shape=None) -> np.ndarray:
        # 1 - U maps [0,1) onto (0,1], keeping the log finite.
        u = 1.0 - self.rng.random(shape)
        return exponential_from_uniform(u, rate)

    def permutation(self, n: int) -> np.ndarray:
        return self.rng.permutation(n)


def as_sampler(seed_or_sampler) -> StreamSampler:
    if isinstance(seed_or_sampler, StreamSampler):
        return seed_or_sampler
    return seed_or_sampler.sampler()
