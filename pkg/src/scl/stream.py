"""Single-stream reference engine.

Runs one online trajectory: realize the rule, decide selection, and at
each selected time build one prediction interval per strategy from the
masked calibration scores.  Written for auditability; the batch engine
reproduces it vectorized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from scl.core import prediction_interval
from scl.rules import ConfigurationError, RuleLedger, RuleSchedule
from scl.strategies import (
    StrategyKind,
    StrategySpec,
    calibration_mask,
    express_m_levels,
)

__all__ = [
    "StreamInputs",
    "TrackRecord",
    "StreamResult",
    "identity_model",
    "arm_count",
    "run_stream",
    "augmented_selection",
]


def identity_model(x):
    return x


@dataclass(frozen=True)
class StreamInputs:
    """One replicate's data: offline pool plus the online sequence."""

    x_offline: np.ndarray
    y_offline: np.ndarray
    x_online: np.ndarray
    y_online: np.ndarray

    def __post_init__(self):
        if len(self.x_offline) != len(self.y_offline):
            raise ConfigurationError("offline features and labels differ in length")
        if len(self.x_online) != len(self.y_online):
            raise ConfigurationError("online features and labels differ in length")


@dataclass
class TrackRecord:
    """Per-time outcomes of one strategy; times without a report hold
    nan/-1 placeholders and reported = False."""

    reported: np.ndarray
    covered: np.ndarray
    size: np.ndarray
    length: np.ndarray
    infinite: np.ndarray
    empty: np.ndarray

    @classmethod
    def blank(cls, n: int) -> "TrackRecord":
        return cls(
            reported=np.zeros(n, dtype=bool),
            covered=np.full(n, np.nan),
            size=np.full(n, -1, dtype=int),
            length=np.full(n, np.nan),
            infinite=np.zeros(n, dtype=bool),
            empty=np.zeros(n, dtype=bool),
        )


@dataclass
class StreamResult:
    decisions: np.ndarray
    tracks: dict[str, TrackRecord]


def arm_count(strategies: Sequence[StrategySpec]) -> int:
    """Number of uniform draws needed per time step (merges use two)."""
    return sum(2 if s.kind is StrategyKind.EXPRESS_M else 1 for s in strategies)


def run_stream(
    schedule: RuleSchedule,
    strategies: Sequence[StrategySpec],
    inputs: StreamInputs,
    alpha: float,
    mu: Callable[[float], float] = identity_model,
    u: np.ndarray | None = None,
) -> StreamResult:
    """Run one trajectory and report per-strategy interval outcomes.

    Parameters
    ----------
    u : array of shape (n_online, arm_count(strategies)), optional
        Uniform draws for the tie-randomized construction, one column per
        interval arm in strategy order.  Omit for the deterministic
        construction.
    """
    n_on = len(inputs.x_online)
    n_off = len(inputs.x_offline)
    if u is not None and u.shape != (n_on, arm_count(strategies)):
        raise ConfigurationError(
            f"u must have shape ({n_on}, {arm_count(strategies)}), got {u.shape}"
        )
    mu_vec = np.vectorize(mu, otypes=[float])
    scores_off = np.abs(mu_vec(inputs.x_offline) - inputs.y_offline) if n_off else np.empty(0)
    scores_on = np.abs(mu_vec(inputs.x_online) - inputs.y_online)

    ledger = RuleLedger(schedule)
    tracks = {s.label: TrackRecord.blank(n_on) for s in strategies}
    decisions = np.zeros(n_on, dtype=int)

    for t in range(n_on):
        rule = ledger.open_next()
        s_t = int(rule(inputs.x_online[t]))
        decisions[t] = s_t
        if s_t == 1:
            x_t = float(inputs.x_online[t])
            y_t = float(inputs.y_online[t])
            center = float(mu(x_t))
            pool = np.concatenate([scores_off, scores_on[:t]])
            arm = 0
            for spec in strategies:
                if spec.kind is StrategyKind.EXPRESS_M:
                    a_fix, a_exp = express_m_levels(alpha, n_on)
                    m_fix = calibration_mask(
                        StrategyKind.S_FIX, t, inputs.x_offline, inputs.x_online, x_t, ledger
                    )
                    m_exp = calibration_mask(
                        StrategyKind.EXPRESS, t, inputs.x_offline, inputs.x_online, x_t, ledger
                    )
                    u1 = None if u is None else float(u[t, arm])
                    u2 = None if u is None else float(u[t, arm + 1])
                    iv = prediction_interval(center, pool[m_fix], a_fix, u1).intersect(
                        prediction_interval(center, pool[m_exp], a_exp, u2)
                    )
                    size = int((m_fix | m_exp).sum())
                    arm += 2
                else:
                    m = calibration_mask(
                        spec.kind,
                        t,
                        inputs.x_offline,
                        inputs.x_online,
                        x_t,
                        ledger,
                        k=spec.k,
                    )
                    uu = None if u is None else float(u[t, arm])
                    iv = prediction_interval(center, pool[m], alpha, uu)
                    size = int(m.sum())
                    arm += 1
                rec = tracks[spec.label]
                rec.reported[t] = True
                rec.covered[t] = float(iv.contains(y_t))
                rec.size[t] = size
                rec.length[t] = iv.length
                rec.infinite[t] = iv.is_infinite
                rec.empty[t] = iv.is_empty
        ledger.record(s_t)

    return StreamResult(decisions=decisions, tracks=tracks)


def augmented_selection(
    schedule: RuleSchedule,
    spec: StrategySpec,
    x_offline: Sequence[float],
    x_online: Sequence[float],
    t: int,
) -> frozenset[int]:
    """The augmented calibration index set at time t, from data alone.

    Decisions are regenerated from scratch on the given features, the
    calibration mask is evaluated at the time-t point, and t itself joins
    the set iff that point is selected.  Offline points carry negative
    indices -n..-1; online points carry their times.
    """
    if t >= len(x_online):
        raise ConfigurationError(f"need online features through time {t}")
    n_off = len(x_offline)
    ledger = RuleLedger(schedule)
    for j in range(t + 1):
        rule = ledger.open_next()
        ledger.record(rule(x_online[j]))
    mask = calibration_mask(
        spec.kind, t, x_offline, x_online, x_online[t], ledger, k=spec.k
    )
    chosen = {j - n_off for j in range(n_off) if mask[j]}
    chosen |= {j for j in range(t) if mask[n_off + j]}
    if ledger.decisions[t] == 1:
        chosen.add(t)
    return frozenset(chosen)
