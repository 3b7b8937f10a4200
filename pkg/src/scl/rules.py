"""Decision-driven selection rules.

A rule at time i is a pure predicate on the feature, constructed from the
decision bits of earlier times only.  Realized predicates are recorded in a
ledger so that strategies can re-evaluate past rules at counterfactual
features (the same predicate applied to a different point).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

__all__ = [
    "ConfigurationError",
    "RuleFamily",
    "RuleSpec",
    "RuleSchedule",
    "RealizedRule",
    "RuleLedger",
    "make_rule",
    "replay",
    "register_custom",
]

# Threshold offsets in the shifted family saturate here, so late streams
# cannot push the acceptance threshold arbitrarily low.
SHIFT_CAP = 2.0


class ConfigurationError(ValueError):
    """Raised for rule or simulation configs that cannot be realized."""


class RuleFamily(str, enum.Enum):
    RUNNING_COUNT_THRESHOLD = "running_count_threshold"
    COUNT_GATE = "count_gate"
    SHIFTED_THRESHOLD = "shifted_threshold"
    CONSTANT_ONE = "constant_one"
    CUSTOM = "custom"


_CUSTOM_REGISTRY: dict[str, Callable[[Sequence[int], int, float], int]] = {}


def register_custom(name: str, fn: Callable[[Sequence[int], int, float], int]) -> None:
    """Register a custom rule body: (history bits, time, feature) -> {0, 1}.

    A best-effort probe rejects bodies that are not reproducible functions
    of their arguments.
    """
    probe_args = ((0, 1, 0), 3, 0.5)
    try:
        first = fn(*probe_args)
        second = fn(*probe_args)
    except Exception as exc:  # pragma: no cover - defensive
        raise ConfigurationError(f"custom rule {name!r} failed its probe: {exc}")
    if first != second or first not in (0, 1):
        raise ConfigurationError(
            f"custom rule {name!r} is not a reproducible 0/1 function"
        )
    _CUSTOM_REGISTRY[name] = fn


@dataclass(frozen=True)
class RuleSpec:
    """Parameterized rule family; tau0 scales the running count, tau1 shifts."""

    family: RuleFamily
    tau0: float = 1.0
    tau1: float = 0.0
    custom_name: str = ""

    def __post_init__(self):
        if self.family in (RuleFamily.RUNNING_COUNT_THRESHOLD, RuleFamily.SHIFTED_THRESHOLD):
            if self.tau0 == 0 or not math.isfinite(self.tau0):
                raise ConfigurationError(
                    f"tau0 must be finite and nonzero, got {self.tau0}"
                )
        if self.family is RuleFamily.CUSTOM and self.custom_name not in _CUSTOM_REGISTRY:
            raise ConfigurationError(
                f"custom rule {self.custom_name!r} is not registered"
            )


@dataclass(frozen=True)
class RuleSchedule:
    """Which rule family applies at each online time.

    The past family applies everywhere; when a test family is present it
    replaces the past family at the single terminal time.
    """

    past: RuleSpec
    test: RuleSpec | None = None
    terminal_time: int | None = None

    def __post_init__(self):
        if (self.test is None) != (self.terminal_time is None):
            raise ConfigurationError(
                "a test family and its terminal time must be given together"
            )

    def spec_at(self, i: int) -> RuleSpec:
        if self.test is not None and i == self.terminal_time:
            return self.test
        return self.past


@dataclass(frozen=True)
class RealizedRule:
    """A rule with its history already folded in: a pure predicate on x.

    kind "below"/"above" compare x to the threshold; "const" ignores x
    (value holds the constant); "opaque" wraps a custom callable.
    """

    kind: str
    threshold: float = math.nan
    value: int = 0
    fn: Callable[[float], int] | None = None

    def __call__(self, x: float) -> int:
        if self.kind == "below":
            return int(x < self.threshold)
        if self.kind == "above":
            return int(x > self.threshold)
        if self.kind == "const":
            return self.value
        return int(self.fn(x))


def make_rule(spec: RuleSpec, history: Sequence[int], time: int | None = None) -> RealizedRule:
    """Realize the predicate for a rule spec given the decision prefix.

    The prefix holds the decisions of all times strictly before the rule's
    time; features and labels never enter.
    """
    count = int(sum(history))
    if spec.family is RuleFamily.RUNNING_COUNT_THRESHOLD:
        return RealizedRule("below", threshold=spec.tau1 + count / spec.tau0)
    if spec.family is RuleFamily.COUNT_GATE:
        return RealizedRule("const", value=int(count > spec.tau1))
    if spec.family is RuleFamily.SHIFTED_THRESHOLD:
        return RealizedRule(
            "above", threshold=spec.tau1 - min(count / spec.tau0, SHIFT_CAP)
        )
    if spec.family is RuleFamily.CONSTANT_ONE:
        return RealizedRule("const", value=1)
    if spec.family is RuleFamily.CUSTOM:
        body = _CUSTOM_REGISTRY[spec.custom_name]
        bits = tuple(int(b) for b in history)
        t = len(bits) if time is None else time
        return RealizedRule("opaque", fn=lambda x: body(bits, t, x))
    raise ConfigurationError(f"unknown rule family: {spec.family!r}")


@dataclass
class RuleLedger:
    """Realized predicates for times 0..len-1 of one stream run.

    Entry i is reproducible from the schedule and the first i decision
    bits alone; appending requires the decision at the previous time.
    """

    schedule: RuleSchedule
    decisions: list[int] = field(default_factory=list)
    entries: list[RealizedRule] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def open_next(self) -> RealizedRule:
        """Realize the rule for the next time from the decisions so far."""
        i = len(self.entries)
        if i != len(self.decisions):
            raise ConfigurationError("previous decision not yet recorded")
        rule = make_rule(self.schedule.spec_at(i), self.decisions, time=i)
        self.entries.append(rule)
        return rule

    def record(self, decision: int) -> None:
        if len(self.decisions) != len(self.entries) - 1:
            raise ConfigurationError("no open rule to record a decision for")
        self.decisions.append(int(decision))

    @classmethod
    def from_decisions(cls, schedule: RuleSchedule, decisions: Sequence[int]) -> "RuleLedger":
        """Rebuild the full ledger from a complete decision sequence."""
        ledger = cls(schedule)
        for s in decisions:
            ledger.open_next()
            ledger.record(int(s))
        return ledger


def replay(ledger: RuleLedger, i: int, x: float) -> int:
    """Evaluate the realized rule of time i at an arbitrary feature."""
    if not 0 <= i < len(ledger.entries):
        raise IndexError(f"no realized rule at time {i}")
    return ledger.entries[i](x)
