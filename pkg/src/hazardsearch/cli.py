"""Command line entry point.

Exit status: 0 on success, 1 for user errors (bad config, missing inputs),
2 for runtime failures (oracle errors, crashes).
"""
from __future__ import annotations

import logging
import sys

import click

from . import analysis, harness
from .config import RESULTS_ROOT_ENV, ConfigError, load_config, resolve_results_path

EXIT_OK, EXIT_USER, EXIT_RUNTIME = 0, 1, 2


class UserError(click.ClickException):
    exit_code = EXIT_USER


class RuntimeFailure(click.ClickException):
    exit_code = EXIT_RUNTIME


def _floats(values, default):
    return tuple(values) if values else tuple(default)


@click.group(help=f"Hazard-boundary search experiments. Set {RESULTS_ROOT_ENV} to "
                  "relocate relative results paths.")
@click.option("-v", "--verbose", count=True, help="Increase log verbosity.")
def cli(verbose):
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@cli.command(help="Run every repeat described by CONFIG.")
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--output-dir", default=None, help="Override the config's output directory.")
@click.option("--jobs", type=click.IntRange(min=1), default=None,
              help="Repeats run in parallel processes.")
def run(config, output_dir, jobs):
    try:
        cfg = load_config(config)
    except ConfigError as exc:
        raise UserError(f"{config}: {exc}") from None
    root = resolve_results_path(output_dir) if output_dir else cfg.output_path()
    try:
        results = harness.run_experiment(cfg, root, jobs)
    except ConfigError as exc:
        raise UserError(str(exc)) from None
    failed = [r for r in results if r["status"] != "complete"]
    for r in results:
        click.echo(f"{cfg.method} repeat {r['repeat']:3d} seed {r['seed']}: {r['status']} "
                   f"({r['evaluations']} evaluations, {r['oracle_calls']} oracle calls)")
    if failed:
        raise RuntimeFailure("; ".join(f"repeat {r['repeat']}: {r.get('error')}" for r in failed)
                             + f" (partial results kept in {root})")
    return EXIT_OK


@cli.command(help="Compute DBS table, progress curves and statistics for RESULTS_DIR.")
@click.argument("results_dir", type=click.Path(file_okay=False))
@click.option("--d-th", "d_ths", type=float, multiple=True, help="Distance threshold (repeatable).")
@click.option("--t-b", "t_bs", type=float, multiple=True, help="Fitness threshold (repeatable).")
@click.option("--checkpoint", "checkpoints", type=click.FloatRange(0, 1), multiple=True,
              help="Budget fraction for progress curves (repeatable).")
def postprocess(results_dir, d_ths, t_bs, checkpoints):
    root = resolve_results_path(results_dir)
    try:
        out = harness.postprocess(root, _floats(d_ths, analysis.D_TH_GRID),
                                  _floats(t_bs, analysis.T_B_GRID),
                                  _floats(checkpoints, analysis.CHECKPOINTS))
    except harness.ResultsError as exc:
        raise UserError(str(exc)) from None
    for path in out.values():
        click.echo(str(path))
    return EXIT_OK


@cli.command("export-plotdata", help="Write long-format plotting CSVs for RESULTS_DIR.")
@click.argument("results_dir", type=click.Path(file_okay=False))
def export_plotdata(results_dir):
    try:
        out = harness.export_plotdata(resolve_results_path(results_dir))
    except harness.ResultsError as exc:
        raise UserError(str(exc)) from None
    for path in out.values():
        click.echo(str(path))
    return EXIT_OK


@cli.command("validate-config", help="Check CONFIG and report the first problem found.")
@click.argument("config", type=click.Path(dir_okay=False))
def validate_config(config):
    try:
        cfg = load_config(config)
    except ConfigError as exc:
        raise UserError(f"{config}: {exc}") from None
    click.echo(f"{config}: ok ({cfg.method}, {cfg.repeats} repeat(s), "
               f"{cfg.search_space().dimensionality} genes)")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="hazardsearch", standalone_mode=False)
    except (UserError, RuntimeFailure) as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_USER
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001
        logging.getLogger(__name__).debug("unhandled error", exc_info=True)
        click.echo(f"Error: {type(exc).__name__}: {exc}", err=True)
        return EXIT_RUNTIME
    return rv if isinstance(rv, int) else EXIT_OK


def entry_point():
    sys.exit(main())
