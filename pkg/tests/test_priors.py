import numpy as np
import pytest

from klabc.priors import (AffineMap, NIWPrior, UniformBoxPrior, mg1_gap_map,
                          sample_niw, sample_uniform_box)
from klabc.rng import derive_stream


def test_identity_box_draw_equals_uniform_stream():
    prior = UniformBoxPrior([0.0], [1.0])
    seed = derive_stream(1, 1, 0)
    theta = sample_uniform_box(prior, seed)
    assert theta[0] == seed.sampler().uniforms(1)[0]


def test_mg1_gap_parameterization():
    # pre-transform draw (theta1, theta2 - theta1, theta3)
    tf = mg1_gap_map()
    assert np.allclose(tf(np.array([1.0, 4.0, 0.2])), [1.0, 5.0, 0.2])


def test_mg1_prior_support_constraint():
    prior = UniformBoxPrior([0, 0, 0], [10, 10, 0.5], mg1_gap_map())
    sampler = derive_stream(2, 1, 0).sampler()
    for _ in range(500):
        t = sample_uniform_box(prior, sampler)
        assert 0 <= t[0] <= t[1] <= 20
        assert 0 <= t[2] <= 0.5


def test_uniform_box_monte_carlo_mean():
    prior = UniformBoxPrior([0.0], [10.0])
    sampler = derive_stream(3, 1, 0).sampler()
    draws = np.array([sample_uniform_box(prior, sampler)[0]
                      for _ in range(100_000)])
    assert abs(draws.mean() - 5.0) < 0.05


def test_uniform_box_validation():
    with pytest.raises(ValueError):
        UniformBoxPrior([0.0], [0.0])
    with pytest.raises(ValueError):
        AffineMap(np.zeros((2, 2)), np.zeros(2))


def test_niw_draws_are_spd():
    prior = NIWPrior([0.0, 0.0], 1.0, np.eye(2), 2.0)
    sampler = derive_stream(4, 1, 0).sampler()
    for _ in range(200):
        draw = sample_niw(prior, sampler)
        assert np.allclose(draw.sigma, draw.sigma.T)
        assert np.all(np.linalg.eigvalsh(draw.sigma) > 0)


def test_niw_root_reconstructs_sigma():
    prior = NIWPrior([1.0, -1.0], 2.0, [[2.0, 0.3], [0.3, 1.0]], 5.0)
    sampler = derive_stream(5, 1, 0).sampler()
    for _ in range(100):
        draw = sample_niw(prior, sampler)
        err = np.linalg.norm(draw.root @ draw.root.T - draw.sigma)
        assert err <= 1e-12 * np.linalg.norm(draw.sigma)
        assert np.allclose(np.triu(draw.root, 1), 0.0)


def test_inverse_wishart_mean():
    # E[Sigma] = phi / (nu - d - 1) = I / 7 for phi = I, nu = 10, d = 2;
    # 30k draws put the Monte Carlo error far inside the 0.01 tolerance.
    prior = NIWPrior([0.0, 0.0], 1.0, np.eye(2), 10.0)
    sampler = derive_stream(6, 1, 0).sampler()
    total = np.zeros((2, 2))
    n = 30_000
    for _ in range(n):
        total += sample_niw(prior, sampler).sigma
    assert np.all(np.abs(total / n - np.eye(2) / 7.0) < 0.01)


def test_large_lambda_concentrates_mu():
    prior = NIWPrior([3.0, -2.0], 1e6, np.eye(2), 10.0)
    sampler = derive_stream(7, 1, 0).sampler()
    for _ in range(20):
        draw = sample_niw(prior, sampler)
        assert np.all(np.abs(draw.mu - prior.mu0) < 0.01)


def test_niw_validation():
    with pytest.raises(ValueError):
        NIWPrior([0.0, 0.0], 0.0, np.eye(2), 3.0)
    with pytest.raises(ValueError):
        NIWPrior([0.0, 0.0], 1.0, np.eye(2), 1.0)
    with pytest.raises(ValueError):
        NIWPrior([0.0, 0.0], 1.0, -np.eye(2), 3.0)


def test_niw_same_seed_same_draw():
    prior = NIWPrior([0.0, 0.0], 1.0, np.eye(2), 4.0)
    a = sample_niw(prior, derive_stream(8, 1, 3))
    b = sample_niw(prior, derive_stream(8, 1, 3))
    assert np.array_equal(a.mu, b.mu)
    assert np.array_equal(a.sigma, b.sigma)
