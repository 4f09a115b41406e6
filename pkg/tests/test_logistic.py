import numpy as np
import pytest

from klabc.features import FeatureMap, fit_feature_map
from klabc.logistic import (CLIP_EPS, LOGIT_CLAMP, L1LogisticSpec,
                            _class_weights, fit_single_with_history,
                            lambda_max, penalized_objective, solve_path,
                            train_l1_logistic)
from klabc.rng import derive_stream
from klabc.simulators.gaussian import simulate_gaussian_toy


def _pool(n, m, mu_real, mu_fake, seed, d=1):
    real = simulate_gaussian_toy([mu_real] * d, np.eye(d), n,
                                 derive_stream(seed, 0, 0)).rows
    fake = simulate_gaussian_toy([mu_fake] * d, np.eye(d), m,
                                 derive_stream(seed, 2, 0)).rows
    return real, fake


def test_intercept_only_fit_is_one_half_for_any_sizes():
    # The mean-form objective has no prior-odds offset: with all slopes
    # removed the optimal intercept is 0 whatever the class imbalance.
    for n, m in [(50, 50), (40, 120), (200, 30)]:
        real, fake = _pool(n, m, 0.0, 0.3, seed=1)
        spec = L1LogisticSpec(featuremap=FeatureMap("raw"),
                              lambdas=(1e6,), cv_folds=1)
        disc = train_l1_logistic(spec, real, fake, derive_stream(1, 3, 0))
        assert np.all(disc.w == 0.0)
        assert disc.b == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(disc.prob(real), 0.5)


def test_separable_pools_classified():
    real = simulate_gaussian_toy([5.0], [[1e-2]], 500,
                                 derive_stream(2, 0, 0)).rows
    fake = simulate_gaussian_toy([-5.0], [[1e-2]], 500,
                                 derive_stream(2, 2, 0)).rows
    spec = L1LogisticSpec(featuremap=FeatureMap("raw"))
    disc = train_l1_logistic(spec, real, fake, derive_stream(2, 3, 0))
    acc = (np.mean(disc.prob(real) > 0.5) + np.mean(disc.prob(fake) < 0.5)) / 2
    assert acc >= 0.99


def test_objective_history_is_non_increasing():
    real, fake = _pool(300, 300, 0.0, 0.8, seed=3)
    pool = np.vstack([real, fake])
    fm = fit_feature_map(FeatureMap("poly2"), pool)
    X = fm(pool)
    y = np.concatenate([np.ones(300), np.zeros(300)])
    v = _class_weights(y)
    spec = L1LogisticSpec()
    for lam in (0.3, 0.05, 0.005):
        _, _, hist, _ = fit_single_with_history(spec, X, y, v, lam)
        assert np.all(np.diff(hist) <= 1e-12)


def test_monotone_sparsity_along_path():
    real, fake = _pool(400, 400, 0.0, 0.6, seed=4, d=3)
    pool = np.vstack([real, fake])
    fm = fit_feature_map(FeatureMap("poly2"), pool)
    X = fm(pool)
    y = np.concatenate([np.ones(400), np.zeros(400)])
    v = _class_weights(y)
    lams, W, _, _ = solve_path(L1LogisticSpec(), X, y, v)
    nnz = (W != 0).sum(axis=1)
    assert np.all(np.diff(nnz) >= 0)  # lambda descending => support grows


def test_kkt_conditions_at_solution():
    real, fake = _pool(500, 500, 0.0, 0.7, seed=5, d=2)
    pool = np.vstack([real, fake])
    fm = fit_feature_map(FeatureMap("poly2"), pool)
    X = fm(pool)
    y = np.concatenate([np.ones(500), np.zeros(500)])
    v = _class_weights(y)
    lam = 0.02
    spec = L1LogisticSpec(max_outer=60, max_inner=200, tol=1e-9)
    w, b, _, conv = fit_single_with_history(spec, X, y, v, lam)
    assert conv
    p = 1.0 / (1.0 + np.exp(-(b + X @ w)))
    grad = (v * (p - y)) @ X
    for j in range(X.shape[1]):
        if w[j] != 0.0:
            assert grad[j] + lam * np.sign(w[j]) == pytest.approx(0.0, abs=2e-5)
        else:
            assert abs(grad[j]) <= lam + 2e-5
    # intercept is unpenalized: its gradient vanishes
    assert np.sum(v * (p - y)) == pytest.approx(0.0, abs=2e-5)


def test_lambda_max_kills_all_slopes():
    real, fake = _pool(100, 100, 0.0, 1.0, seed=6)
    pool = np.vstack([real, fake])
    fm = fit_feature_map(FeatureMap("poly2"), pool)
    X = fm(pool)
    y = np.concatenate([np.ones(100), np.zeros(100)])
    v = _class_weights(y)
    lmax = lambda_max(X, y, v)
    lams, W, B, _ = solve_path(L1LogisticSpec(), X, y, v,
                               lams=np.array([lmax * 1.0001]))
    assert np.all(W == 0.0) and B[0] == pytest.approx(0.0, abs=1e-12)


def test_logit_is_clipped():
    from klabc.logistic import TrainedLogistic
    fm = fit_feature_map(FeatureMap("raw", standardize=False),
                         np.zeros((2, 1)))
    disc = TrainedLogistic(featuremap=fm, w=np.array([50.0]), b=0.0, lam=0.1)
    logits = disc.logit(np.array([[100.0], [-100.0], [0.1]]))
    # saturated inputs stop exactly at log((1-eps)/eps) ~ 16.118
    assert logits[0] == pytest.approx(np.log((1 - CLIP_EPS) / CLIP_EPS))
    assert logits[1] == -logits[0]
    assert logits[2] == pytest.approx(5.0)  # interior values untouched
    probs = disc.prob(np.array([[100.0], [-100.0]]))
    assert np.all(probs >= CLIP_EPS) and np.all(probs <= 1 - CLIP_EPS)


def test_label_swap_negates_logits_exactly():
    # With a fixed single lambda and n = m the solver is equivariant under
    # label exchange, so swapping the pools flips every logit.
    real, fake = _pool(80, 80, 0.0, 0.5, seed=8)
    spec = L1LogisticSpec(featuremap=FeatureMap("poly2"), lambdas=(0.05,),
                          cv_folds=1)
    seed = derive_stream(8, 3, 0)
    d1 = train_l1_logistic(spec, real, fake, seed)
    d2 = train_l1_logistic(spec, fake, real, seed)
    grid = np.linspace(-2, 2, 9)[:, None]
    assert np.allclose(d1.logit(grid), -d2.logit(grid), atol=1e-10)


def test_objective_value_matches_helper():
    real, fake = _pool(60, 90, 0.0, 0.4, seed=9)
    pool = np.vstack([real, fake])
    fm = fit_feature_map(FeatureMap("raw"), pool)
    X = fm(pool)
    y = np.concatenate([np.ones(60), np.zeros(90)])
    v = _class_weights(y)
    # obj at zero parameters: BCE of p = 0.5 is 2 log 2 under mean form
    val = penalized_objective(X, y, v, np.zeros(X.shape[1]), 0.0, 0.123)
    assert val == pytest.approx(2 * np.log(2.0))


def test_requires_two_rows_per_class():
    with pytest.raises(ValueError):
        train_l1_logistic(L1LogisticSpec(), np.ones((1, 2)), np.ones((5, 2)),
                          derive_stream(10, 3, 0))


def test_lambda_grid_validation():
    with pytest.raises(ValueError):
        L1LogisticSpec(lambdas=())
    with pytest.raises(ValueError):
        L1LogisticSpec(lambdas=(0.1, -0.2))
    with pytest.raises(ValueError):
        L1LogisticSpec(n_lambdas=0)
