"""L1-penalized logistic regression trained on the mean-form objective

    M(D) = (1/n) sum_real log D + (1/m) sum_fake log(1 - D),

i.e. per-sample weights 1/n on real rows and 1/m on fake rows, so the
population optimum is the unweighted density ratio regardless of the m/n
imbalance.  Fitting minimizes -M + lam * ||w||_1 by proximal Newton (IRLS)
with cyclic coordinate descent, soft-thresholding and an active-set inner
loop, warm-started along a descending lambda path.  lambda is chosen by
k-fold cross-validation on the held-out value of M, ties broken toward the
larger (sparser) lambda.

A backtracking safeguard makes the penalized objective non-increasing across
outer sweeps; if no progress is possible the best iterate is kept and the
fit is flagged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .features import FeatureMap, FittedFeatureMap, fit_feature_map
from .rng import as_sampler

CLIP_EPS = 1e-7
# log((1 - eps) / eps): logits are clamped here so probabilities stay inside
# [eps, 1 - eps].
LOGIT_CLAMP = float(np.log((1.0 - CLIP_EPS) / CLIP_EPS))

# glmnet-style floor on the IRLS variance term, keeps working responses
# bounded on separable data.
_P_FLOOR = 1e-5


@njit(cache=True, fastmath=True)
def _objective(eta, y, v, w, lam):
    # sum_i v_i (softplus(eta_i) - y_i eta_i) + lam ||w||_1
    total = 0.0
    for i in range(eta.size):
        e = eta[i]
        if e > 0.0:
            sp = e + np.log1p(np.exp(-e))
        else:
            sp = np.log1p(np.exp(e))
        total += v[i] * (sp - y[i] * e)
    return total + lam * np.sum(np.abs(w))


@njit(cache=True, inline="always", fastmath=True)
def _cd_sweep(xt, xsq, omega, r, w, lam, coords, n_active):
    """One cyclic pass over ``coords[:n_active]``; returns max |delta w|."""
    delta = 0.0
    for idx in range(n_active):
        j = coords[idx]
        if xsq[j] <= 0.0:
            continue
        wj = w[j]
        rho = xsq[j] * wj
        row = xt[j]
        for i in range(r.size):
            rho += omega[i] * row[i] * r[i]
        if rho > lam:
            wj_new = (rho - lam) / xsq[j]
        elif rho < -lam:
            wj_new = (rho + lam) / xsq[j]
        else:
            wj_new = 0.0
        dw = wj_new - wj
        if dw != 0.0:
            for i in range(r.size):
                r[i] -= row[i] * dw
            w[j] = wj_new
            if abs(dw) > delta:
                delta = abs(dw)
    return delta


@njit(cache=True, fastmath=True)
def _fit_single(xt, y, v, lam, w, b, max_outer, max_inner, tol, history):
    """IRLS + active-set coordinate descent at one lambda.

    xt is the (p, n) transposed feature matrix.  w is updated in place;
    history receives the penalized objective after each outer sweep.
    Returns (b, n_history, converged).
    """
    p, n = xt.shape
    all_coords = np.arange(p)
    active = np.empty(p, dtype=np.int64)

    eta = np.empty(n)
    for i in range(n):
        s = b
        for j in range(p):
            s += xt[j, i] * w[j]
        eta[i] = s
    f_best = _objective(eta, y, v, w, lam)
    history[0] = f_best
    n_hist = 1
    converged = False

    omega = np.empty(n)
    z = np.empty(n)
    r = np.empty(n)
    xsq = np.empty(p)

    for _ in range(max_outer):
        # Quadratic approximation at the current iterate.
        for i in range(n):
            e = eta[i]
            if e > 0.0:
                pi = 1.0 / (1.0 + np.exp(-e))
            else:
                ex = np.exp(e)
                pi = ex / (1.0 + ex)
            if pi < _P_FLOOR:
                pi = _P_FLOOR
            elif pi > 1.0 - _P_FLOOR:
                pi = 1.0 - _P_FLOOR
            var = pi * (1.0 - pi)
            omega[i] = v[i] * var
            z[i] = eta[i] + (y[i] - pi) / var
            r[i] = z[i] - eta[i]
        sum_omega = np.sum(omega)
        for j in range(p):
            s = 0.0
            row = xt[j]
            for i in range(n):
                s += omega[i] * row[i] * row[i]
            xsq[j] = s

        w_old = w.copy()
        b_old = b

        sweeps = 0
        while sweeps < max_inner:
            # Full pass (includes the intercept), then iterate the active set.
            num = 0.0
            for i in range(n):
                num += omega[i] * r[i]
            db = num / sum_omega
            b += db
            for i in range(n):
                r[i] -= db
            delta_full = _cd_sweep(xt, xsq, omega, r, w, lam, all_coords, p)
            sweeps += 1
            if max(delta_full, abs(db)) < tol:
                break
            n_active = 0
            for j in range(p):
                if w[j] != 0.0:
                    active[n_active] = j
                    n_active += 1
            while sweeps < max_inner:
                num = 0.0
                for i in range(n):
                    num += omega[i] * r[i]
                db = num / sum_omega
                b += db
                for i in range(n):
                    r[i] -= db
                delta = _cd_sweep(xt, xsq, omega, r, w, lam, active, n_active)
                sweeps += 1
                if max(delta, abs(db)) < tol:
                    break

        for i in range(n):
            s = b
            for j in range(p):
                if w[j] != 0.0:
                    s += xt[j, i] * w[j]
            eta[i] = s
        f_new = _objective(eta, y, v, w, lam)
        # Backtrack toward the previous iterate if the Newton step overshot.
        back = 0
        while f_new > f_best + 1e-12 and back < 12:
            for j in range(p):
                w[j] = 0.5 * (w[j] + w_old[j])
            b = 0.5 * (b + b_old)
            for i in range(n):
                s = b
                for j in range(p):
                    if w[j] != 0.0:
                        s += xt[j, i] * w[j]
                eta[i] = s
            f_new = _objective(eta, y, v, w, lam)
            back += 1
        if f_new > f_best + 1e-12:
            # No progress possible: restore the best iterate and stop.
            for j in range(p):
                w[j] = w_old[j]
            b = b_old
            history[n_hist] = f_best
            n_hist += 1
            break
        moved = abs(b - b_old)
        for j in range(p):
            if abs(w[j] - w_old[j]) > moved:
                moved = abs(w[j] - w_old[j])
        history[n_hist] = f_new
        n_hist += 1
        f_best = f_new
        if moved < tol * 10.0:
            converged = True
            break
    return b, n_hist, converged


@njit(cache=True, fastmath=True)
def _fit_path(xt, y, v, lams, max_outer, max_inner, tol, bce_floor):
    """Warm-started descending-lambda path.

    Once the training BCE saturates below bce_floor (near-separated pools)
    the remaining smaller lambdas reuse the current solution: prediction-time
    logit clipping makes them indistinguishable anyway.
    """
    nlam = lams.size
    p = xt.shape[0]
    W = np.zeros((nlam, p))
    B = np.zeros(nlam)
    ok = np.zeros(nlam, dtype=np.bool_)
    hist = np.empty(max_outer + 2)
    w = np.zeros(p)
    b = 0.0
    prev_bce = np.inf
    for k in range(nlam):
        b, n_hist, conv = _fit_single(xt, y, v, lams[k], w, b,
                                      max_outer, max_inner, tol, hist)
        W[k] = w
        B[k] = b
        ok[k] = conv
        bce = hist[n_hist - 1] - lams[k] * np.sum(np.abs(w))
        plateau = prev_bce - bce < 1e-3 * max(bce, 1e-3)
        prev_bce = bce
        if bce < bce_floor or plateau:
            for kk in range(k + 1, nlam):
                W[kk] = w
                B[kk] = b
                ok[kk] = conv
            break
    return W, B, ok


def fit_single_with_history(spec: "L1LogisticSpec", X, y, v, lam,
                            w0=None, b0: float = 0.0):
    """One-lambda fit returning the per-sweep objective values (for the
    ascent-property check)."""
    xt = np.ascontiguousarray(np.asarray(X, dtype=float).T)
    w = np.zeros(xt.shape[0]) if w0 is None else np.asarray(w0, float).copy()
    hist = np.empty(spec.max_outer + 2)
    b, n_hist, conv = _fit_single(xt, np.asarray(y, float),
                                  np.asarray(v, float), lam, w, b0,
                                  spec.max_outer, spec.max_inner, spec.tol,
                                  hist)
    return w, float(b), hist[:n_hist].copy(), bool(conv)


def penalized_objective(X, y, v, w, b, lam) -> float:
    """Mean-form BCE loss plus L1 penalty (the quantity the solver minimizes)."""
    eta = b + np.asarray(X, float) @ np.asarray(w, dtype=float)
    return float(_objective(eta, np.asarray(y, float), np.asarray(v, float),
                            np.asarray(w, float), lam))


def lambda_max(X, y, v) -> float:
    """Smallest lambda with an all-zero slope solution (intercept stays 0)."""
    grad = (v * (0.5 - y)) @ X
    return float(np.max(np.abs(grad)))


def _class_weights(y: np.ndarray) -> np.ndarray:
    v = np.empty(y.size)
    n1 = int(y.sum())
    v[y == 1.0] = 1.0 / n1
    v[y == 0.0] = 1.0 / (y.size - n1)
    return v


def _heldout_score(logits, y) -> float:
    """Mean-form BCE value of clipped predictions on a held-out pool."""
    clipped = np.clip(logits, -LOGIT_CLAMP, LOGIT_CLAMP)
    log_d = -np.logaddexp(0.0, -clipped)
    log_1md = -np.logaddexp(0.0, clipped)
    real = y == 1.0
    return float(log_d[real].mean() + log_1md[~real].mean())


@dataclass(frozen=True)
class L1LogisticSpec:
    featuremap: FeatureMap = FeatureMap("poly2")
    n_lambdas: int = 50
    lambda_min_ratio: float = 1e-3
    lambdas: Optional[tuple] = None  # explicit grid overrides the automatic one
    cv_folds: int = 5
    max_outer: int = 12
    max_inner: int = 30
    tol: float = 1e-6
    bce_floor: float = 0.05

    def __post_init__(self):
        if self.lambdas is not None:
            lams = tuple(float(l) for l in self.lambdas)
            if len(lams) == 0 or any(l <= 0 for l in lams):
                raise ValueError("lambda grid must be nonempty and positive")
            object.__setattr__(self, "lambdas", lams)
        elif self.n_lambdas < 1 or not 0 < self.lambda_min_ratio < 1:
            raise ValueError("need n_lambdas >= 1 and 0 < lambda_min_ratio < 1")


@dataclass(frozen=True)
class TrainedLogistic:
    featuremap: FittedFeatureMap
    w: np.ndarray
    b: float
    lam: float
    clip_eps: float = CLIP_EPS
    warn: bool = False

    def raw_logit(self, rows) -> np.ndarray:
        return self.b + self.featuremap(rows) @ self.w

    def logit(self, rows) -> np.ndarray:
        return np.clip(self.raw_logit(rows), -LOGIT_CLAMP, LOGIT_CLAMP)

    def prob(self, rows) -> np.ndarray:
        p = 1.0 / (1.0 + np.exp(-self.logit(rows)))
        return np.clip(p, self.clip_eps, 1.0 - self.clip_eps)


def _resolve_grid(spec: L1LogisticSpec, X, y, v) -> np.ndarray:
    if spec.lambdas is not None:
        return np.sort(np.asarray(spec.lambdas, dtype=float))[::-1].copy()
    lmax = max(lambda_max(X, y, v), 1e-10)
    return np.geomspace(lmax, lmax * spec.lambda_min_ratio, spec.n_lambdas)


def solve_path(spec: L1LogisticSpec, X, y, v, lams=None):
    """Warm-started path solve on prepared (standardized) features."""
    if lams is None:
        lams = _resolve_grid(spec, X, y, v)
    xt = np.ascontiguousarray(np.asarray(X, dtype=float).T)
    W, B, ok = _fit_path(xt, np.asarray(y, dtype=float),
                         np.asarray(v, dtype=float),
                         np.asarray(lams, dtype=float),
                         spec.max_outer, spec.max_inner, spec.tol,
                         spec.bce_floor)
    return np.asarray(lams, dtype=float), W, B, ok


def train_l1_logistic(spec: L1LogisticSpec, real_rows, fake_rows,
                      seed) -> TrainedLogistic:
    real_rows = np.atleast_2d(np.asarray(real_rows, dtype=float))
    fake_rows = np.atleast_2d(np.asarray(fake_rows, dtype=float))
    n, m = real_rows.shape[0], fake_rows.shape[0]
    if n < 2 or m < 2:
        raise ValueError("need at least two rows per class")

    pool = np.vstack([real_rows, fake_rows])
    if not np.all(np.isfinite(pool)):
        raise ValueError("training pool contains non-finite rows")
    fm = fit_feature_map(spec.featuremap, pool)
    X = fm(pool)
    y = np.concatenate([np.ones(n), np.zeros(m)])
    v = _class_weights(y)
    lams = _resolve_grid(spec, X, y, v)

    if lams.size > 1 and spec.cv_folds > 1:
        sampler = as_sampler(seed)
        k = min(spec.cv_folds, n, m)
        real_folds = np.array_split(sampler.permutation(n), k)
        fake_folds = np.array_split(n + sampler.permutation(m), k)
        scores = np.zeros((k, lams.size))
        for f in range(k):
            ho = np.concatenate([real_folds[f], fake_folds[f]])
            mask = np.ones(n + m, dtype=bool)
            mask[ho] = False
            y_tr = y[mask]
            _, W, B, _ = solve_path(spec, X[mask], y_tr, _class_weights(y_tr),
                                    lams=lams)
            ho_logits = X[ho] @ W.T + B
            for idx in range(lams.size):
                scores[f, idx] = _heldout_score(ho_logits[:, idx], y[ho])
        # Grid is descending, so argmax of the mean score already breaks
        # ties toward the larger lambda.
        best = int(np.argmax(scores.mean(axis=0)))
    else:
        best = lams.size - 1

    _, W, B, ok = solve_path(spec, X, y, v, lams=lams)
    return TrainedLogistic(featuremap=fm, w=W[best].copy(), b=float(B[best]),
                           lam=float(lams[best]), warn=not bool(ok[best]))
