"""Command line interface: simulation runs, bundled setups, oracle checks."""

from __future__ import annotations

import sys

import click

from scl import __version__
from scl.config import load_config
from scl.oracle import SYMMETRIC_KINDS, verify_strategy
from scl.presets import PRESETS, preset_description, preset_jobs
from scl.rules import ConfigurationError
from scl.sim import resolve_threads, run_simulation, write_outputs
from scl.strategies import StrategyKind, StrategySpec

_DEFAULT_ORACLE_SUITE = (
    StrategySpec(StrategyKind.S_FIX),
    StrategySpec(StrategyKind.EXPRESS),
    StrategySpec(StrategyKind.K_EXPRESS, k=2),
    StrategySpec(StrategyKind.ADA),
    StrategySpec(StrategyKind.S_FULL),
    StrategySpec(StrategyKind.FULL),
)


@click.group()
@click.version_option(version=__version__, prog_name="scl")
def main():
    """Online selective conformal inference: simulation and verification."""


def _fail_config(exc: ConfigurationError):
    click.echo(f"error: {exc}", err=True)
    sys.exit(2)


def _run_jobs(jobs, out, replicates, seed, threads):
    try:
        n_threads = resolve_threads(threads)
        for job in jobs:
            cfg = job.config
            overrides = {}
            if replicates is not None:
                overrides["replicates"] = replicates
            if seed is not None:
                overrides["seed"] = seed
            if overrides:
                cfg = cfg.override(**overrides)
            output = run_simulation(cfg, threads=n_threads)
            for path in write_outputs(output, out, prefix=job.prefix):
                click.echo(f"wrote {path}")
    except ConfigurationError as exc:
        _fail_config(exc)


_SHARED = [
    click.option("--out", required=True, type=click.Path(file_okay=False), help="Output directory for CSV files."),
    click.option("--replicates", type=int, default=None, help="Override the replicate count."),
    click.option("--seed", type=int, default=None, help="Override the base seed."),
    click.option("--threads", type=int, default=None, help="Worker threads; default from SCL_THREADS, else 1."),
]


def _with_shared(fn):
    for opt in reversed(_SHARED):
        fn = opt(fn)
    return fn


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@_with_shared
def run(config_path, out, replicates, seed, threads):
    """Run the simulation described by a JSON config file."""
    try:
        cfg = load_config(config_path)
    except ConfigurationError as exc:
        _fail_config(exc)
    from scl.presets import PresetJob

    _run_jobs([PresetJob("", cfg)], out, replicates, seed, threads)


@main.command()
@click.argument("name")
@_with_shared
def preset(name, out, replicates, seed, threads):
    """Run a bundled setup by name (see list-presets)."""
    try:
        jobs = preset_jobs(name)
    except ConfigurationError as exc:
        _fail_config(exc)
    _run_jobs(jobs, out, replicates, seed, threads)


@main.command("list-presets")
def list_presets():
    """Show the bundled setups."""
    width = max(len(n) for n in PRESETS)
    for name in PRESETS:
        click.echo(f"{name:<{width}}  {preset_description(name)}")


def _parse_strategy(text: str) -> StrategySpec:
    name, _, window = text.partition(":")
    k = None
    if window:
        try:
            k = int(window)
        except ValueError:
            raise ConfigurationError(f"--strategy: window {window!r} is not an integer")
    try:
        kind = StrategyKind(name)
    except ValueError:
        names = ", ".join(s.value for s in StrategyKind)
        raise ConfigurationError(f"--strategy: unknown kind {name!r}, expected one of: {names}")
    return StrategySpec(kind, k=k)


@main.command()
@click.option("--instances", type=int, default=200, show_default=True, help="Random instances per strategy.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option(
    "--strategy",
    "strategy_text",
    default=None,
    help="Check one strategy only, e.g. express or k_express:5.",
)
def oracle(instances, seed, strategy_text):
    """Brute-force permutation check of each strategy's calibration set.

    Exits nonzero if a strategy that is symmetric by construction ever
    changes its regenerated set under permutation.  The pool strategies
    that ignore selection history are expected to fail and do not affect
    the exit code.
    """
    try:
        if strategy_text is not None:
            suite = (_parse_strategy(strategy_text),)
        else:
            suite = _DEFAULT_ORACLE_SUITE
        if instances < 1:
            raise ConfigurationError("--instances: must be at least 1")
    except ConfigurationError as exc:
        _fail_config(exc)

    broken = False
    for spec in suite:
        report = verify_strategy(spec, instances=instances, seed=seed)
        expected_symmetric = spec.kind in SYMMETRIC_KINDS
        if report.passed:
            verdict = "invariant"
        else:
            verdict = "asymmetric"
            if expected_symmetric:
                verdict = "BROKEN"
                broken = True
        click.echo(
            f"{report.label:<12} checked {report.checked:>4}/{report.instances}"
            f"  violations {report.violations:<4} {verdict}"
        )
        if report.witness is not None and (expected_symmetric or strategy_text):
            w = report.witness
            click.echo(
                f"  witness: t={w.t} x_online={list(w.x_online)} "
                f"x_offline={list(w.x_offline)} mapping={list(w.mapping)} "
                f"expected={sorted(w.expected)} got={sorted(w.got)}"
            )
    if broken:
        sys.exit(1)


if __name__ == "__main__":
    main()
