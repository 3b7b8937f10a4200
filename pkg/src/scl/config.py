"""JSON run configuration: loading, validation, defaults.

Validation errors carry the offending key path; JSON syntax errors carry
the line and column from the decoder.  Both raise ConfigurationError so
the command line can map them to a usage exit code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from scl.rules import ConfigurationError, RuleFamily, RuleSchedule, RuleSpec
from scl.strategies import StrategyKind, StrategySpec

__all__ = ["DataConfig", "SimConfig", "load_config", "config_from_dict", "BASELINE_NAMES"]

BASELINE_NAMES = ("lord_ci", "aci")


@dataclass(frozen=True)
class DataConfig:
    """Feature and noise model: x uniform on a range, y = beta * x + eps
    with eps normal of variance noise_variance_slope * x."""

    x_low: float = 0.0
    x_high: float = 2.0
    beta: float = 1.0
    noise_variance_slope: float = 0.5

    def __post_init__(self):
        if not self.x_high > self.x_low:
            raise ConfigurationError("data.x_range: high endpoint must exceed low")
        if self.noise_variance_slope < 0:
            raise ConfigurationError("data.noise_variance_slope: must be nonnegative")
        if self.x_low < 0 and self.noise_variance_slope > 0:
            raise ConfigurationError(
                "data.x_range: negative features need zero noise_variance_slope"
            )


@dataclass(frozen=True)
class SimConfig:
    alpha: float
    n_offline: int
    n_online: int
    schedule: RuleSchedule
    strategies: tuple[StrategySpec, ...]
    baselines: tuple[str, ...] = ()
    aci_gamma: float = 0.005
    randomized: bool = True
    report: str = "all"
    replicates: int = 1000
    seed: int = 0
    data: DataConfig = field(default_factory=DataConfig)

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ConfigurationError(f"alpha: must lie in (0, 1), got {self.alpha}")
        if self.n_offline < 0:
            raise ConfigurationError("n_offline: must be nonnegative")
        if self.n_online < 1:
            raise ConfigurationError("n_online: must be at least 1")
        if self.report not in ("all", "terminal"):
            raise ConfigurationError(f"report: must be 'all' or 'terminal', got {self.report!r}")
        if self.replicates < 1:
            raise ConfigurationError("replicates: must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed: must fit in an unsigned 64-bit integer")
        if not self.strategies and not self.baselines:
            raise ConfigurationError("strategies: need at least one strategy or baseline")
        for b in self.baselines:
            if b not in BASELINE_NAMES:
                raise ConfigurationError(
                    f"baselines: unknown name {b!r}, expected one of {BASELINE_NAMES}"
                )
        if self.aci_gamma <= 0:
            raise ConfigurationError("aci_gamma: must be positive")
        if (
            self.schedule.terminal_time is not None
            and not 0 <= self.schedule.terminal_time < self.n_online
        ):
            raise ConfigurationError(
                f"rule.terminal_time: must lie in [0, {self.n_online}), "
                f"got {self.schedule.terminal_time}"
            )

    def override(self, **kwargs) -> "SimConfig":
        return replace(self, **kwargs)


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise ConfigurationError(f"{path or 'config'}: missing required key {key!r}")
    return obj[key]


def _typed(value, types, path):
    if not isinstance(value, types) or isinstance(value, bool) and bool not in (
        types if isinstance(types, tuple) else (types,)
    ):
        names = (
            "/".join(t.__name__ for t in types)
            if isinstance(types, tuple)
            else types.__name__
        )
        raise ConfigurationError(f"{path}: expected {names}, got {value!r}")
    return value


def _rule_spec(obj, path) -> RuleSpec:
    _typed(obj, dict, path)
    family_name = _typed(_require(obj, "family", path), str, f"{path}.family")
    try:
        family = RuleFamily(family_name)
    except ValueError:
        names = ", ".join(f.value for f in RuleFamily)
        raise ConfigurationError(
            f"{path}.family: unknown family {family_name!r}, expected one of: {names}"
        )
    kwargs = {}
    for k in ("tau0", "tau1"):
        if k in obj:
            kwargs[k] = float(_typed(obj[k], (int, float), f"{path}.{k}"))
    if "custom_name" in obj:
        kwargs["custom_name"] = _typed(obj["custom_name"], str, f"{path}.custom_name")
    unknown = set(obj) - {"family", "tau0", "tau1", "custom_name"}
    if unknown:
        raise ConfigurationError(f"{path}: unknown keys {sorted(unknown)}")
    try:
        return RuleSpec(family, **kwargs)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}")


def _strategy(entry, path) -> StrategySpec:
    if isinstance(entry, str):
        kind_name, k = entry, None
    elif isinstance(entry, dict):
        kind_name = _typed(_require(entry, "kind", path), str, f"{path}.kind")
        k = entry.get("k")
        if k is not None:
            k = int(_typed(k, int, f"{path}.k"))
        unknown = set(entry) - {"kind", "k"}
        if unknown:
            raise ConfigurationError(f"{path}: unknown keys {sorted(unknown)}")
    else:
        raise ConfigurationError(f"{path}: expected a strategy name or object, got {entry!r}")
    try:
        kind = StrategyKind(kind_name)
    except ValueError:
        names = ", ".join(s.value for s in StrategyKind)
        raise ConfigurationError(
            f"{path}: unknown strategy {kind_name!r}, expected one of: {names}"
        )
    try:
        return StrategySpec(kind, k=k)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}")


def config_from_dict(obj: dict) -> SimConfig:
    _typed(obj, dict, "config")
    known = {
        "alpha",
        "n_offline",
        "n_online",
        "rule",
        "strategies",
        "baselines",
        "aci_gamma",
        "randomized",
        "report",
        "replicates",
        "seed",
        "data",
    }
    unknown = set(obj) - known
    if unknown:
        raise ConfigurationError(f"config: unknown keys {sorted(unknown)}")

    alpha = float(_typed(_require(obj, "alpha", ""), (int, float), "alpha"))
    n_off = int(_typed(_require(obj, "n_offline", ""), int, "n_offline"))
    n_on = int(_typed(_require(obj, "n_online", ""), int, "n_online"))

    rule_obj = _typed(_require(obj, "rule", ""), dict, "rule")
    past = _rule_spec(_require(rule_obj, "past", "rule"), "rule.past")
    test = None
    terminal = rule_obj.get("terminal_time")
    if "test" in rule_obj:
        test = _rule_spec(rule_obj["test"], "rule.test")
    if terminal is not None:
        terminal = int(_typed(terminal, int, "rule.terminal_time"))
    unknown = set(rule_obj) - {"past", "test", "terminal_time"}
    if unknown:
        raise ConfigurationError(f"rule: unknown keys {sorted(unknown)}")
    try:
        schedule = RuleSchedule(past, test=test, terminal_time=terminal)
    except ConfigurationError as exc:
        raise ConfigurationError(f"rule: {exc}")

    strategies = tuple(
        _strategy(entry, f"strategies[{i}]")
        for i, entry in enumerate(_typed(obj.get("strategies", []), list, "strategies"))
    )
    labels = [s.label for s in strategies]
    if len(set(labels)) != len(labels):
        raise ConfigurationError("strategies: duplicate strategy labels")
    baselines = tuple(
        _typed(b, str, f"baselines[{i}]")
        for i, b in enumerate(_typed(obj.get("baselines", []), list, "baselines"))
    )

    data_obj = _typed(obj.get("data", {}), dict, "data")
    unknown = set(data_obj) - {"x_range", "beta", "noise_variance_slope"}
    if unknown:
        raise ConfigurationError(f"data: unknown keys {sorted(unknown)}")
    data_kwargs = {}
    if "x_range" in data_obj:
        rng = _typed(data_obj["x_range"], list, "data.x_range")
        if len(rng) != 2:
            raise ConfigurationError("data.x_range: expected [low, high]")
        data_kwargs["x_low"] = float(_typed(rng[0], (int, float), "data.x_range[0]"))
        data_kwargs["x_high"] = float(_typed(rng[1], (int, float), "data.x_range[1]"))
    if "beta" in data_obj:
        data_kwargs["beta"] = float(_typed(data_obj["beta"], (int, float), "data.beta"))
    if "noise_variance_slope" in data_obj:
        data_kwargs["noise_variance_slope"] = float(
            _typed(data_obj["noise_variance_slope"], (int, float), "data.noise_variance_slope")
        )

    return SimConfig(
        alpha=alpha,
        n_offline=n_off,
        n_online=n_on,
        schedule=schedule,
        strategies=strategies,
        baselines=baselines,
        aci_gamma=float(
            _typed(obj.get("aci_gamma", 0.005), (int, float), "aci_gamma")
        ),
        randomized=_typed(obj.get("randomized", True), bool, "randomized"),
        report=_typed(obj.get("report", "all"), str, "report"),
        replicates=int(_typed(obj.get("replicates", 1000), int, "replicates")),
        seed=int(_typed(obj.get("seed", 0), int, "seed")),
        data=DataConfig(**data_kwargs),
    )


def load_config(path: str | Path) -> SimConfig:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        )
    return config_from_dict(obj)
