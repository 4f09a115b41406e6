"""Command-line front end.

Subcommands: run, repeat, kl-grid, calibrate, summarize, ingest-ohlc.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime
failure.  Outputs are byte-identical across reruns and thread counts.
"""

from __future__ import annotations

import sys
from importlib import resources
from pathlib import Path

import click
import numpy as np

from .config import ExperimentConfig, load_config
from .engine import ReferenceTable
from .errors import ConfigError, DataError
from .evaluation import summarize
from .experiment import (repeat_experiment, run_and_persist, run_calibrate,
                         run_grid, summary_rows, write_calibrate_csv,
                         write_grid_csv, write_manifest, write_repeat_csv,
                         write_summary_csv)
from .ohlc import ingest_ohlc

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4


def bundled_config(name: str) -> Path:
    """Path of a config shipped with the package (e.g. 'mg1_desk.toml')."""
    ref = resources.files("klabc") / "configs" / name
    with resources.as_file(ref) as path:
        return Path(path)


def _load(config_path, seed_override) -> ExperimentConfig:
    exp = load_config(config_path)
    if seed_override is not None:
        exp.master_seed = int(seed_override)
        exp.resolved["master_seed"] = int(seed_override)
    return exp


def _out_dir(exp: ExperimentConfig, flag_value) -> Path:
    out = flag_value or exp.output_dir
    if out is None:
        raise ConfigError("no output directory: set output_dir in the "
                          "config or pass --output-dir")
    return Path(out)


def _run_guarded(fn):
    try:
        fn()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except DataError as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(EXIT_DATA)
    except Exception as exc:
        click.echo(f"runtime failure: {type(exc).__name__}: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)


@click.group()
def main():
    """Likelihood-free inference with classifier-based KL discrepancies."""


_config_opt = click.option("--config", "config_path", required=True,
                           type=click.Path(), help="TOML experiment config.")
_threads_opt = click.option("--threads", default=1, show_default=True,
                            help="Worker processes; results do not depend "
                                 "on this.")
_output_opt = click.option("--output-dir", default=None,
                           type=click.Path(), help="Overrides output_dir.")
_seed_opt = click.option("--seed", default=None, type=int,
                         help="Overrides master_seed from the config.")


@main.command()
@_config_opt
@_threads_opt
@_output_opt
@_seed_opt
def run(config_path, threads, output_dir, seed):
    """Build the reference table and posterior summary for one experiment."""
    def body():
        exp = _load(config_path, seed)
        out = _out_dir(exp, output_dir)
        result = run_and_persist(exp, out, threads=threads)
        click.echo(f"wrote {out / 'reference_table.csv'} "
                   f"(ess={result.ess:.1f})")
    _run_guarded(body)


@main.command()
@_config_opt
@_threads_opt
@_output_opt
@_seed_opt
def repeat(config_path, threads, output_dir, seed):
    """Rerun the experiment on n_reps fresh datasets and average."""
    def body():
        exp = _load(config_path, seed)
        out = _out_dir(exp, output_dir)
        out.mkdir(parents=True, exist_ok=True)
        rows, _, failures = repeat_experiment(exp, threads=threads)
        write_repeat_csv(out / "repeat_summary.csv", rows)
        write_manifest(out / "run_manifest.json", exp,
                       extra={"failed_reps": failures})
        for rep, msg in failures:
            click.echo(f"rep {rep} failed: {msg}", err=True)
        click.echo(f"wrote {out / 'repeat_summary.csv'}")
    _run_guarded(body)


@main.command(name="kl-grid")
@_config_opt
@_output_opt
@_seed_opt
def kl_grid_cmd(config_path, output_dir, seed):
    """Evaluate the discrepancy over the configured parameter grid."""
    def body():
        exp = _load(config_path, seed)
        out = _out_dir(exp, output_dir)
        out.mkdir(parents=True, exist_ok=True)
        grid = run_grid(exp)
        write_grid_csv(out / "grid.csv", exp, grid)
        write_manifest(out / "run_manifest.json", exp)
        click.echo(f"wrote {out / 'grid.csv'} "
                   f"(argmin at {grid.argmin_node()})")
    _run_guarded(body)


@main.command()
@_config_opt
@_output_opt
@_seed_opt
def calibrate(config_path, output_dir, seed):
    """Sweep discriminators x m/n x bundle counts along each parameter."""
    def body():
        exp = _load(config_path, seed)
        out = _out_dir(exp, output_dir)
        out.mkdir(parents=True, exist_ok=True)
        rows = run_calibrate(exp)
        write_calibrate_csv(out / "calibrate.csv", rows)
        write_manifest(out / "run_manifest.json", exp)
        click.echo(f"wrote {out / 'calibrate.csv'} ({len(rows)} rows)")
    _run_guarded(body)


@main.command()
@click.argument("table_path", type=click.Path())
@_config_opt
@click.option("--output", default=None, type=click.Path(),
              help="Summary CSV path (default: summary.csv next to the "
                   "table).")
def summarize_cmd(table_path, config_path, output):
    """Recompute the posterior summary from a persisted reference table."""
    def body():
        exp = _load(config_path, None)
        try:
            table = ReferenceTable.load(table_path)
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot load {table_path}: {exc}") from exc
        truth_reported = None
        if exp.truth is not None:
            _, vals = exp.model.report_transform(exp.truth[None, :])
            truth_reported = vals[0]
        summary = summarize(table, truth=truth_reported,
                            transform=exp.model.report_transform)
        out = Path(output) if output else Path(table_path).parent / "summary.csv"
        write_summary_csv(out, summary_rows(exp, summary))
        click.echo(f"wrote {out}")
    _run_guarded(body)


main.add_command(summarize_cmd, name="summarize")


@main.command(name="ingest-ohlc")
@click.argument("csv_paths", nargs=-1, required=True, type=click.Path())
@click.option("--output", required=True, type=click.Path(),
              help="Destination dataset CSV (days x 3 * assets).")
def ingest_ohlc_cmd(csv_paths, output):
    """Convert per-asset OHLC price CSVs into a model-ready dataset."""
    def body():
        ds = ingest_ohlc(list(csv_paths), output)
        click.echo(f"wrote {output} ({ds.n} days x {ds.p} columns)")
    _run_guarded(body)


if __name__ == "__main__":
    main()
