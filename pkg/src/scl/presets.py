"""Bundled simulation configurations.

Seven named setups at desk scale.  Numbers 1 and 5 report a single
terminal interval per trajectory; the others track every selected time.
Two of them pair a growing-threshold rule with a retreating-threshold
rule on otherwise identical settings, and ship as two jobs whose output
files share a directory.
"""

from __future__ import annotations

from dataclasses import dataclass

from scl.config import SimConfig
from scl.rules import ConfigurationError, RuleFamily, RuleSchedule, RuleSpec
from scl.strategies import StrategyKind, StrategySpec

__all__ = ["PresetJob", "PRESETS", "preset_jobs", "preset_description"]


@dataclass(frozen=True)
class PresetJob:
    """One simulation run inside a preset; prefix distinguishes output
    files when a preset carries several runs."""

    prefix: str
    config: SimConfig


def _strategies(k: int) -> tuple[StrategySpec, ...]:
    return (
        StrategySpec(StrategyKind.FULL),
        StrategySpec(StrategyKind.S_FULL),
        StrategySpec(StrategyKind.S_FIX),
        StrategySpec(StrategyKind.ADA),
        StrategySpec(StrategyKind.EXPRESS),
        StrategySpec(StrategyKind.K_EXPRESS, k=k),
        StrategySpec(StrategyKind.EXPRESS_M),
    )


def _growing(tau0: float) -> RuleSpec:
    # threshold rises with each selection: x_t < tau1 + count / tau0
    return RuleSpec(RuleFamily.RUNNING_COUNT_THRESHOLD, tau0=tau0, tau1=1.0)


def _retreating(tau0: float) -> RuleSpec:
    # threshold falls with each selection: x_t > tau1 - min(count / tau0, 2)
    return RuleSpec(RuleFamily.SHIFTED_THRESHOLD, tau0=tau0, tau1=1.0)


def _terminal_screen() -> SimConfig:
    """Descending-threshold stream whose single report happens at the end,
    gated on nearly every earlier candidate having been selected."""
    schedule = RuleSchedule(
        RuleSpec(RuleFamily.RUNNING_COUNT_THRESHOLD, tau0=-20.0, tau1=2.0),
        test=RuleSpec(RuleFamily.COUNT_GATE, tau1=16.0),
        terminal_time=19,
    )
    return SimConfig(
        alpha=0.4,
        n_offline=10,
        n_online=20,
        schedule=schedule,
        strategies=_strategies(k=10),
        report="terminal",
        replicates=100_000,
        seed=101,
    )


def _tracked_panels(seed: int, past: RuleSpec) -> SimConfig:
    return SimConfig(
        alpha=0.4,
        n_offline=50,
        n_online=200,
        schedule=RuleSchedule(past),
        strategies=_strategies(k=10),
        report="all",
        replicates=10_000,
        seed=seed,
    )


def _long_stream(seed: int, baselines: tuple[str, ...], with_window: bool) -> SimConfig:
    strategies = (StrategySpec(StrategyKind.K_EXPRESS, k=50),) if with_window else ()
    return SimConfig(
        alpha=0.4,
        n_offline=200,
        n_online=1500,
        schedule=RuleSchedule(_growing(1500.0)),
        strategies=strategies,
        baselines=baselines,
        report="all",
        replicates=1_000,
        seed=seed,
    )


def _paired_terminal(seed: int) -> tuple[PresetJob, PresetJob]:
    def one(past: RuleSpec) -> SimConfig:
        return SimConfig(
            alpha=0.4,
            n_offline=10,
            n_online=20,
            schedule=RuleSchedule(past),
            strategies=_strategies(k=10),
            report="terminal",
            replicates=100_000,
            seed=seed,
        )

    return (
        PresetJob("growing_", one(_growing(20.0))),
        PresetJob("retreating_", one(_retreating(20.0))),
    )


def _paired_tracked(seed: int) -> tuple[PresetJob, PresetJob]:
    return (
        PresetJob("growing_", _tracked_panels(seed, _growing(200.0))),
        PresetJob("retreating_", _tracked_panels(seed, _retreating(200.0))),
    )


_BUILDERS = {
    "illustration1": (
        "terminal report behind a near-unanimity gate, 10 offline / 20 online",
        lambda: (PresetJob("", _terminal_screen()),),
    ),
    "illustration2": (
        "growing-threshold stream, per-time panels, 50 offline / 200 online",
        lambda: (PresetJob("", _tracked_panels(102, _growing(200.0))),),
    ),
    "illustration3": (
        "budget-spending baseline on a long stream, 200 offline / 1500 online",
        lambda: (PresetJob("", _long_stream(103, ("lord_ci",), with_window=False)),),
    ),
    "illustration4": (
        "both baselines against a windowed strategy on a long stream",
        lambda: (PresetJob("", _long_stream(104, ("lord_ci", "aci"), with_window=True)),),
    ),
    "illustration5": (
        "growing vs retreating thresholds, terminal report, 10 offline / 20 online",
        lambda: _paired_terminal(105),
    ),
    "illustration6": (
        "growing vs retreating thresholds, per-time panels, 50 offline / 200 online",
        lambda: _paired_tracked(106),
    ),
    "illustration7": (
        "retreating-threshold stream, per-time panels, 50 offline / 200 online",
        lambda: (PresetJob("", _tracked_panels(107, _retreating(200.0))),),
    ),
}

PRESETS = tuple(sorted(_BUILDERS))


def preset_jobs(name: str) -> tuple[PresetJob, ...]:
    if name not in _BUILDERS:
        known = ", ".join(PRESETS)
        raise ConfigurationError(f"unknown preset {name!r}, expected one of: {known}")
    return _BUILDERS[name][1]()


def preset_description(name: str) -> str:
    if name not in _BUILDERS:
        raise ConfigurationError(f"unknown preset {name!r}")
    return _BUILDERS[name][0]
