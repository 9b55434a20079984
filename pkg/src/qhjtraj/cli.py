"""Command-line front end.

Exit codes: 0 all requested checks pass, 1 at least one check fails,
2 configuration error.
"""

from __future__ import annotations

import sys

import click

from . import __version__
from .config import fixture_path, load_config
from .errors import ConfigError
from .scenario import RunReport, run_scenario

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2


def _out_options(fn):
    fn = click.option(
        "--out",
        envvar="QHJTRAJ_OUT",
        type=click.Path(file_okay=False),
        default=None,
        help="Output directory (env QHJTRAJ_OUT; default ./qhjtraj-out).",
    )(fn)
    fn = click.option(
        "--tolerance-scale",
        type=float,
        default=1.0,
        show_default=True,
        help="Multiply every check tolerance by this factor.",
    )(fn)
    fn = click.option(
        "--seed", type=click.IntRange(min=0), default=None, help="Override the config seed."
    )(fn)
    return fn


def _print_report(report: RunReport, verbose_timings: bool = True):
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        parts = [f"{status} {check.name}"]
        if check.value is not None and check.tolerance is not None:
            parts.append(f"value={check.value:.6g} tolerance={check.tolerance:.6g}")
        if check.detail:
            parts.append(f"({check.detail})")
        click.echo("  ".join(parts))
    if verbose_timings and report.timings:
        total = sum(report.timings.values())
        click.echo(f"timings: total {total:.2f}s", err=True)


def _execute(cfg, out, tolerance_scale, seed) -> int:
    report = run_scenario(cfg, out_dir=out, tolerance_scale=tolerance_scale, seed=seed)
    _print_report(report)
    click.echo(("all checks passed" if report.passed else "checks FAILED"))
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


@click.group()
@click.version_option(version=__version__, prog_name="qhjtraj")
def main():
    """Quantum trajectories in 1-D: solve, compare time laws, check invariances."""


@main.command()
@click.argument("config", type=click.Path(dir_okay=False))
@_out_options
def run(config, out, tolerance_scale, seed):
    """Run the scenario described by CONFIG (YAML)."""
    try:
        cfg = load_config(config)
    except ConfigError as err:
        click.echo(f"config error: {err}", err=True)
        sys.exit(EXIT_CONFIG)
    sys.exit(_execute(cfg, out, tolerance_scale, seed))


@main.command()
@click.argument("config", type=click.Path(dir_okay=False))
def validate(config):
    """Validate CONFIG against the scenario schema without running it."""
    try:
        cfg = load_config(config)
    except ConfigError as err:
        click.echo(f"config error: {err}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(f"OK: {cfg.name}")
    sys.exit(EXIT_OK)


@main.command()
@click.argument("name")
@_out_options
def demo(name, out, tolerance_scale, seed):
    """Run a shipped fixture scenario by NAME.

    Available: classical, microstate, contradiction, harmonic.
    """
    try:
        cfg = load_config(fixture_path(name))
    except ConfigError as err:
        click.echo(f"config error: {err}", err=True)
        sys.exit(EXIT_CONFIG)
    sys.exit(_execute(cfg, out, tolerance_scale, seed))


if __name__ == "__main__":
    main()
