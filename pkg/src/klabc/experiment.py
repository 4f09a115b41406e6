"""Wires a parsed ExperimentConfig into runnable pipelines: single runs,
repetition studies, discrepancy grids and the discriminator calibration
sweep.  All file outputs are deterministic functions of the config."""

from __future__ import annotations

import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .config import ExperimentConfig, build_discriminator_spec
from .data import Dataset
from .discrepancy import (Discrepancy, feature_mean_summary,
                          fit_semi_auto_pilot)
from .engine import (ABCConfig, ReferenceTable, build_reference_table,
                     effective_sample_size, fake_sample_size)
from .errors import ConfigError, DataError
from .evaluation import GridResult, PosteriorSummary, kl_grid, summarize
from .rng import PURPOSE_DATA, PURPOSE_REP, derive_master, derive_stream

_CSV_FMT = "%.17g"


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    return _CSV_FMT % float(x)


def rep_master_seed(exp: ExperimentConfig, rep: int) -> int:
    """Repetition 0 is the run itself; later reps get derived masters."""
    if rep == 0:
        return exp.master_seed
    return derive_master(exp.master_seed, PURPOSE_REP, rep)


def make_real_dataset(exp: ExperimentConfig, master_seed: int) -> Dataset:
    if exp.data_path is not None:
        try:
            return Dataset.load(exp.data_path)
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot load {exp.data_path}: {exc}") from exc
    ds, _ = exp.model.simulate(exp.truth, exp.n_obs,
                               derive_stream(master_seed, PURPOSE_DATA, 0))
    return ds


def build_discrepancy(exp: ExperimentConfig, master_seed: int) -> Discrepancy:
    cfg = exp.discrepancy_cfg
    kind = cfg["kind"]
    if kind.startswith("classifier"):
        return Discrepancy(kind,
                           discriminator=build_discriminator_spec(
                               cfg["discriminator"]))
    if kind == "summary_l2":
        fms = tuple(feature_mean_summary(f)
                    for f in cfg["summary"]["featuremaps"])
        return Discrepancy(kind, summaries=fms)
    if kind == "semi_auto":
        sa = cfg["semi_auto"]
        n_pilot = max(10, int(round(sa["pilot_fraction"] * exp.n_proposals)))
        m = fake_sample_size(exp.m_ratio, exp.n_obs)

        def simulate(theta, seed):
            return exp.model.simulate(theta, m, seed)[0].rows

        fitted = fit_semi_auto_pilot(simulate, exp.sample_prior, n_pilot,
                                     sa["featuremap"], master_seed)
        return Discrepancy(kind, semi_auto=fitted)
    return Discrepancy(kind)


@dataclass
class RunResult:
    table: ReferenceTable
    summary: PosteriorSummary
    real: Dataset
    ess: float


def run_single(exp: ExperimentConfig, master_seed: int,
               threads: int = 1) -> RunResult:
    real = make_real_dataset(exp, master_seed)
    discrepancy = build_discrepancy(exp, master_seed)
    abc = ABCConfig(n_proposals=exp.n_proposals, master_seed=master_seed,
                    kernel=exp.kernel, m_ratio=exp.m_ratio,
                    nlatent=exp.nlatent)
    table = build_reference_table(abc, exp.sample_prior, exp.model, real,
                                  discrepancy, threads=threads)
    truth_reported = None
    if exp.truth is not None:
        _, vals = exp.model.report_transform(exp.truth[None, :])
        truth_reported = vals[0]
    summary = summarize(table, truth=truth_reported,
                        transform=exp.model.report_transform)
    return RunResult(table=table, summary=summary, real=real,
                     ess=effective_sample_size(table.weights))


def summary_rows(exp: ExperimentConfig, summary: PosteriorSummary) -> List[dict]:
    rows = []
    for i, name in enumerate(summary.names):
        rows.append({
            "metric": exp.discrepancy_cfg["kind"],
            "kernel": exp.kernel_name,
            "coordinate": name,
            "mean": summary.mean[i],
            "sq_error": None if summary.sq_error is None
            else summary.sq_error[i],
            "ci_low": summary.ci_low[i],
            "ci_high": summary.ci_high[i],
            "ci_width": summary.ci_width[i],
            "coverage": None if summary.covered is None
            else summary.covered[i],
        })
    return rows


_SUMMARY_COLUMNS = ("metric", "kernel", "coordinate", "mean", "sq_error",
                    "ci_low", "ci_high", "ci_width", "coverage")


def write_summary_csv(path, rows: List[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow([
                row["metric"], row["kernel"], row["coordinate"],
                _fmt(row["mean"]), _fmt(row["sq_error"]), _fmt(row["ci_low"]),
                _fmt(row["ci_high"]), _fmt(row["ci_width"]),
                _fmt(row["coverage"])])


def write_manifest(path, exp: ExperimentConfig, extra: Optional[dict] = None):
    import numba
    import scipy
    manifest = {
        "config": exp.resolved,
        "versions": {
            "klabc": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
            "python": sys.version.split()[0],
        },
    }
    if extra:
        manifest.update(extra)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_and_persist(exp: ExperimentConfig, out_dir, threads: int = 1) -> RunResult:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = run_single(exp, exp.master_seed, threads=threads)
    result.table.save(out / "reference_table.csv")
    write_summary_csv(out / "summary.csv", summary_rows(exp, result.summary))
    write_manifest(out / "run_manifest.json", exp,
                   extra={"ess": result.ess,
                          "flagged_rows": int(result.table.flags.sum())})
    return result


def repeat_experiment(exp: ExperimentConfig, threads: int = 1):
    """n_reps independent datasets and full runs; averaged per coordinate.

    Returns (aggregate rows, per-rep summaries, failures)."""
    per_rep = []
    failures = []
    for rep in range(exp.n_reps):
        try:
            result = run_single(exp, rep_master_seed(exp, rep),
                                threads=threads)
            per_rep.append(result.summary)
        except Exception as exc:  # per-rep failures recorded, not fatal
            failures.append((rep, f"{type(exc).__name__}: {exc}"))
    if not per_rep:
        raise RuntimeError(f"all {exp.n_reps} repetitions failed: {failures}")

    names = per_rep[0].names
    rows = []
    for i, name in enumerate(names):
        sq = [s.sq_error[i] for s in per_rep if s.sq_error is not None]
        cov = [s.covered[i] for s in per_rep if s.covered is not None]
        rows.append({
            "metric": exp.discrepancy_cfg["kind"],
            "kernel": exp.kernel_name,
            "coordinate": name,
            "mean_sq_error": float(np.mean(sq)) if sq else None,
            "mean_ci_width": float(np.mean([s.ci_width[i] for s in per_rep])),
            "coverage_rate": float(np.mean(cov)) if cov else None,
            "n_reps": len(per_rep),
        })
    return rows, per_rep, failures


def write_repeat_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("metric", "kernel", "coordinate", "mean_sq_error",
                         "mean_ci_width", "coverage_rate", "n_reps"))
        for row in rows:
            writer.writerow([
                row["metric"], row["kernel"], row["coordinate"],
                _fmt(row["mean_sq_error"]), _fmt(row["mean_ci_width"]),
                _fmt(row["coverage_rate"]), row["n_reps"]])


# ---------------------------------------------------------------------------
# grid and calibration commands

def _axis_indices(exp: ExperimentConfig, axes_cfg: dict):
    names = exp.model.param_names
    axes = []
    for key, values in axes_cfg.items():
        if key not in names:
            raise ConfigError(f"[grid.axes] key {key!r} is not one of {names}")
        axes.append((names.index(key), np.asarray(values, dtype=float)))
    if not axes:
        raise ConfigError("[grid.axes] must name at least one parameter")
    return axes


def run_grid(exp: ExperimentConfig, master_seed: Optional[int] = None) -> GridResult:
    if exp.grid_cfg is None:
        raise ConfigError("config has no [grid] section")
    if exp.truth is None:
        raise ConfigError("grid evaluation needs model.theta0 for the "
                          "fixed coordinates")
    master_seed = exp.master_seed if master_seed is None else master_seed
    axes = _axis_indices(exp, exp.grid_cfg.get("axes") or {})
    nlatent = int(exp.grid_cfg.get("nlatent", exp.nlatent))
    m_ratio = float(exp.grid_cfg.get("m_ratio", exp.m_ratio))
    real = make_real_dataset(exp, master_seed)
    discrepancy = build_discrepancy(exp, master_seed)
    return kl_grid(real, exp.model, axes, exp.truth, discrepancy,
                   master_seed, nlatent=nlatent, m_ratio=m_ratio)


def write_grid_csv(path, exp: ExperimentConfig, grid: GridResult) -> None:
    names = exp.model.param_names
    axis_names = [names[c] for c, _ in grid.axes]
    rescaled = grid.khat_rescaled
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(axis_names + ["khat", "khat_rescaled", "flags"])
        for i in range(grid.nodes.shape[0]):
            row = [_fmt(grid.nodes[i, c]) for c, _ in grid.axes]
            row += [_fmt(grid.khat[i]), _fmt(rescaled[i]),
                    str(int(grid.flags[i]))]
            writer.writerow(row)


def run_calibrate(exp: ExperimentConfig):
    """Appendix-style sweep: discriminators x m/n ratios x bundle counts,
    one khat curve per parameter axis (other coordinates at truth), each
    curve min-subtracted."""
    cfg = exp.calibrate_cfg
    if cfg is None:
        raise ConfigError("config has no [calibrate] section")
    if exp.truth is None:
        raise ConfigError("calibration needs model.theta0")
    disc_tables = cfg.get("discriminators")
    if not disc_tables:
        raise ConfigError("[calibrate] needs at least one [[calibrate."
                          "discriminators]] entry")
    m_ratios = [float(r) for r in cfg.get("m_ratios", [1, 2, 3, 5])]
    nlatents = [int(l) for l in cfg.get("nlatents", [1, 5, 10])]
    axes_cfg = cfg.get("axes") or {}
    axes = _axis_indices(exp, axes_cfg)

    real = make_real_dataset(exp, exp.master_seed)
    rows = []
    for disc_table in disc_tables:
        disc_table = dict(disc_table)
        name = disc_table.pop("name", disc_table.get("kind", "discriminator"))
        spec = build_discriminator_spec(disc_table)
        discrepancy = Discrepancy("classifier_kl", discriminator=spec)
        for m_ratio in m_ratios:
            for nlatent in nlatents:
                for coord, values in axes:
                    grid = kl_grid(real, exp.model, [(coord, values)],
                                   exp.truth, discrepancy, exp.master_seed,
                                   nlatent=nlatent, m_ratio=m_ratio)
                    rescaled = grid.khat_rescaled
                    pname = exp.model.param_names[coord]
                    for i, v in enumerate(values):
                        rows.append({
                            "discriminator": name, "m_ratio": m_ratio,
                            "nlatent": nlatent, "param": pname,
                            "value": float(v), "khat": float(grid.khat[i]),
                            "khat_rescaled": float(rescaled[i])})
    return rows


def write_calibrate_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("discriminator", "m_ratio", "nlatent", "param",
                         "value", "khat", "khat_rescaled"))
        for row in rows:
            writer.writerow([
                row["discriminator"], _fmt(row["m_ratio"]), row["nlatent"],
                row["param"], _fmt(row["value"]), _fmt(row["khat"]),
                _fmt(row["khat_rescaled"])])
