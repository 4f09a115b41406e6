"""TOML experiment configuration: parsing, validation and the resolved echo
that goes into the run manifest.

The file mirrors the module structure:

    master_seed = 20240101          # required
    [model]       kind, theta0 / data_path, n_obs, model options
    [prior]       kind = "uniform_box" | "niw", parameters
    [discrepancy] kind + metric sub-tables
    [engine]      n_proposals, m_ratio, nlatent, kernel, q / scale
    [grid] / [calibrate]            # used by the grid commands

All defaults are materialized into the resolved dictionary so the manifest
alone reproduces the run.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Callable, Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .discriminators import DiscriminatorSpec
from .engine import AcceptRejectKernel, ExponentialKernel, Kernel
from .errors import ConfigError
from .features import KINDS as FEATURE_KINDS
from .features import FeatureMap
from .logistic import L1LogisticSpec
from .mlp import MLPSpec
from .priors import (AffineMap, NIWPrior, UniformBoxPrior, mg1_gap_map,
                     sample_niw_theta, sample_uniform_box)
from .simulators import Model, make_model

_MODEL_OPTION_KEYS = {
    "mg1": (),
    "lv": ("x0", "y0", "record_dt", "horizon", "max_events"),
    "gk": (),
    "brownian": ("steps_per_day", "assets"),
    "gauss": ("sigma",),
}


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"missing required key {key!r} in [{where}]")
    return table[key]


@dataclass
class ExperimentConfig:
    master_seed: int
    n_reps: int
    output_dir: Optional[str]
    model: Model
    truth: Optional[np.ndarray]
    n_obs: int
    data_path: Optional[str]
    prior_kind: str
    sample_prior: Callable
    discrepancy_cfg: dict
    n_proposals: int
    m_ratio: float
    nlatent: int
    kernel: Kernel
    kernel_name: str
    resolved: dict
    grid_cfg: Optional[dict] = None
    calibrate_cfg: Optional[dict] = None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} does not parse: {exc}") from exc
    return parse_config(raw)


def parse_config(raw: dict) -> ExperimentConfig:
    if "master_seed" not in raw:
        raise ConfigError("missing required key 'master_seed'")
    master_seed = int(raw["master_seed"])
    n_reps = int(raw.get("n_reps", 1))
    if n_reps < 1:
        raise ConfigError("n_reps must be >= 1")
    output_dir = raw.get("output_dir")

    model, truth, n_obs, data_path, model_echo = _parse_model(
        raw.get("model") or {})
    prior_kind, sample_prior, prior_echo = _parse_prior(
        raw.get("prior") or {}, model)
    discrepancy_cfg = _normalize_discrepancy(raw.get("discrepancy") or {})
    (n_proposals, m_ratio, nlatent, kernel, kernel_name,
     engine_echo) = _parse_engine(raw.get("engine") or {})

    resolved = {
        "master_seed": master_seed,
        "n_reps": n_reps,
        "output_dir": output_dir,
        "model": model_echo,
        "prior": prior_echo,
        "discrepancy": discrepancy_cfg,
        "engine": engine_echo,
    }
    return ExperimentConfig(
        master_seed=master_seed, n_reps=n_reps, output_dir=output_dir,
        model=model, truth=truth, n_obs=n_obs, data_path=data_path,
        prior_kind=prior_kind, sample_prior=sample_prior,
        discrepancy_cfg=discrepancy_cfg, n_proposals=n_proposals,
        m_ratio=m_ratio, nlatent=nlatent, kernel=kernel,
        kernel_name=kernel_name, resolved=resolved,
        grid_cfg=raw.get("grid"), calibrate_cfg=raw.get("calibrate"))


def _parse_model(table: dict):
    kind = _require(table, "kind", "model")
    if kind not in _MODEL_OPTION_KEYS:
        raise ConfigError(f"unknown model kind {kind!r}")
    n_obs = int(_require(table, "n_obs", "model"))
    if n_obs < 1:
        raise ConfigError("model.n_obs must be >= 1")
    options = {k: table[k] for k in _MODEL_OPTION_KEYS[kind] if k in table}
    known = set(_MODEL_OPTION_KEYS[kind]) | {"kind", "n_obs", "theta0",
                                             "data_path"}
    unknown = set(table) - known
    if unknown:
        raise ConfigError(f"unknown [model] keys: {sorted(unknown)}")
    try:
        model = make_model(kind, **options)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid [model] options: {exc}") from exc

    truth = table.get("theta0")
    data_path = table.get("data_path")
    if truth is None and data_path is None:
        raise ConfigError("[model] needs either theta0 (synthetic truth) "
                          "or data_path (observed data)")
    if truth is not None:
        truth = np.asarray(truth, dtype=float).ravel()
        if truth.size != model.param_dim:
            raise ConfigError(
                f"model.theta0 must have length {model.param_dim}")
    echo = {"kind": kind, "n_obs": n_obs, **options}
    if truth is not None:
        echo["theta0"] = [float(x) for x in truth]
    if data_path is not None:
        echo["data_path"] = str(data_path)
    return model, truth, n_obs, data_path, echo


def _parse_prior(table: dict, model: Model):
    kind = _require(table, "kind", "prior")
    if kind == "uniform_box":
        lower = np.asarray(_require(table, "lower", "prior"), dtype=float)
        upper = np.asarray(_require(table, "upper", "prior"), dtype=float)
        transform = None
        echo = {"kind": kind, "lower": lower.tolist(),
                "upper": upper.tolist()}
        if table.get("transform") == "mg1_gap":
            transform = mg1_gap_map()
            echo["transform"] = "mg1_gap"
        elif "transform_matrix" in table:
            transform = AffineMap(
                np.asarray(table["transform_matrix"], dtype=float),
                np.asarray(table.get("transform_offset",
                                     np.zeros(lower.size)), dtype=float))
            echo["transform_matrix"] = transform.matrix.tolist()
            echo["transform_offset"] = transform.offset.tolist()
        elif "transform" in table:
            raise ConfigError(
                f"unknown prior transform {table['transform']!r}")
        try:
            prior = UniformBoxPrior(lower, upper, transform)
        except ValueError as exc:
            raise ConfigError(f"invalid [prior]: {exc}") from exc
        if prior.dim != model.param_dim:
            raise ConfigError("prior dimension does not match the model")
        return kind, partial(sample_uniform_box, prior), echo
    if kind == "niw":
        mu0 = np.asarray(_require(table, "mu0", "prior"), dtype=float)
        lam = float(_require(table, "lambda", "prior"))
        phi = np.asarray(_require(table, "phi", "prior"), dtype=float)
        nu = float(_require(table, "nu", "prior"))
        try:
            prior = NIWPrior(mu0, lam, phi, nu)
        except ValueError as exc:
            raise ConfigError(f"invalid [prior]: {exc}") from exc
        d = prior.dim
        if d + d * (d + 1) // 2 != model.param_dim:
            raise ConfigError("NIW prior dimension does not match the model")
        echo = {"kind": kind, "mu0": mu0.tolist(), "lambda": lam,
                "phi": phi.tolist(), "nu": nu}
        return kind, partial(sample_niw_theta, prior), echo
    raise ConfigError(f"unknown prior kind {kind!r}")


def build_discriminator_spec(table: dict) -> DiscriminatorSpec:
    table = dict(table)
    kind = table.pop("kind", "l1_logistic")
    fm_kind = table.pop("featuremap", "poly2" if kind == "l1_logistic"
                        else "raw")
    if fm_kind not in FEATURE_KINDS:
        raise ConfigError(f"unknown featuremap {fm_kind!r}")
    fm = FeatureMap(fm_kind, bool(table.pop("standardize", True)))
    try:
        if kind == "l1_logistic":
            lambdas = table.pop("lambdas", None)
            spec = L1LogisticSpec(
                featuremap=fm,
                n_lambdas=int(table.pop("n_lambdas", 50)),
                lambda_min_ratio=float(table.pop("lambda_min_ratio", 1e-3)),
                lambdas=tuple(lambdas) if lambdas is not None else None,
                cv_folds=int(table.pop("cv_folds", 5)))
        elif kind == "mlp":
            spec = MLPSpec(
                featuremap=fm,
                hidden=tuple(table.pop("hidden", (10, 10))),
                activations=tuple(table.pop("activations",
                                            ("relu", "tanh"))),
                epochs=int(table.pop("epochs", 200)),
                learning_rate=float(table.pop("learning_rate", 1e-2)),
                batch_size=int(table.pop("batch_size", 64)))
        else:
            raise ConfigError(f"unknown discriminator kind {kind!r}")
    except ValueError as exc:
        raise ConfigError(f"invalid [discrepancy.discriminator]: {exc}") from exc
    if table:
        raise ConfigError(
            f"unknown [discrepancy.discriminator] keys: {sorted(table)}")
    return spec


_DISCREPANCY_KINDS = ("classifier_kl", "classifier_kl_reverse",
                      "classifier_accuracy", "knn_kl", "wasserstein2",
                      "summary_l2", "semi_auto", "aux_likelihood")


def _normalize_discrepancy(table: dict) -> dict:
    kind = _require(table, "kind", "discrepancy")
    if kind not in _DISCREPANCY_KINDS:
        raise ConfigError(f"unknown discrepancy kind {kind!r}")
    out = {"kind": kind}
    if kind.startswith("classifier"):
        disc = dict(table.get("discriminator") or {})
        # Validate eagerly so config errors surface before any simulation.
        build_discriminator_spec(disc)
        out["discriminator"] = disc
    if kind == "summary_l2":
        summary = dict(table.get("summary") or {})
        fms = summary.get("featuremaps", ["raw"])
        for fm in fms:
            if fm not in FEATURE_KINDS:
                raise ConfigError(f"unknown summary featuremap {fm!r}")
        out["summary"] = {"featuremaps": list(fms)}
    if kind == "semi_auto":
        sa = dict(table.get("semi_auto") or {})
        fm = sa.get("featuremap", "poly2")
        if fm not in FEATURE_KINDS:
            raise ConfigError(f"unknown semi_auto featuremap {fm!r}")
        frac = float(sa.get("pilot_fraction", 0.1))
        if not 0 < frac <= 1:
            raise ConfigError("semi_auto.pilot_fraction must be in (0, 1]")
        out["semi_auto"] = {"featuremap": fm, "pilot_fraction": frac}
    return out


def _parse_engine(table: dict):
    n_proposals = int(_require(table, "n_proposals", "engine"))
    m_ratio = float(table.get("m_ratio", 3.0))
    nlatent = int(table.get("nlatent", 10))
    kernel_name = table.get("kernel", "exponential")
    echo = {"n_proposals": n_proposals, "m_ratio": m_ratio,
            "nlatent": nlatent, "kernel": kernel_name}
    try:
        if kernel_name == "accept_reject":
            q = float(_require(table, "q", "engine"))
            if not 0 < q <= 1:
                raise ConfigError("engine.q must be in (0, 1]")
            if q * n_proposals < 1:
                raise ConfigError("engine.q * n_proposals < 1: nothing "
                                  "would be accepted")
            kernel = AcceptRejectKernel(q)
            echo["q"] = q
        elif kernel_name == "exponential":
            scale = table.get("scale")
            aggregation = table.get("bundle_aggregation", "mean_khat")
            kernel = ExponentialKernel(
                None if scale in (None, 0) else float(scale), aggregation)
            echo["scale"] = ("n_obs" if kernel.scale is None
                             else kernel.scale)
            echo["bundle_aggregation"] = aggregation
        else:
            raise ConfigError(f"unknown kernel {kernel_name!r}")
    except ValueError as exc:
        raise ConfigError(f"invalid [engine]: {exc}") from exc
    if n_proposals < 1 or m_ratio <= 0 or nlatent < 1:
        raise ConfigError("engine needs n_proposals >= 1, m_ratio > 0, "
                          "nlatent >= 1")
    return n_proposals, m_ratio, nlatent, kernel, kernel_name, echo
