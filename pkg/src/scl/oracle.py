"""Brute-force exchangeability checks for calibration strategies.

A strategy earns its coverage guarantee when the augmented calibration
set it commits to is invariant under permuting the data at exactly those
positions, with all selection decisions regenerated on the permuted
stream.  This module checks that invariance by enumeration on small
instances, and separately checks the downstream consequence: the rank of
the test score inside the augmented set is uniform.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from scl.rules import (
    ConfigurationError,
    RuleFamily,
    RuleLedger,
    RuleSchedule,
    RuleSpec,
)
from scl.strategies import StrategyKind, StrategySpec, calibration_mask
from scl.stream import augmented_selection

__all__ = [
    "Witness",
    "VerificationReport",
    "check_instance",
    "verify_strategy",
    "rank_histogram",
    "uniformity_pvalue",
    "SYMMETRIC_KINDS",
]

# strategies whose augmented set is permutation-invariant by construction
SYMMETRIC_KINDS = (StrategyKind.S_FIX, StrategyKind.EXPRESS, StrategyKind.K_EXPRESS)


@dataclass(frozen=True)
class Witness:
    """A permutation that changes the regenerated augmented set."""

    x_offline: tuple[float, ...]
    x_online: tuple[float, ...]
    t: int
    mapping: tuple[tuple[int, int], ...]  # index -> index, over the augmented set
    expected: frozenset[int]
    got: frozenset[int]


@dataclass
class VerificationReport:
    label: str
    instances: int = 0
    checked: int = 0
    violations: int = 0
    witness: Witness | None = field(default=None)

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _apply_mapping(x_offline, x_online, mapping, n_off):
    """Place the feature of index src at position dst for each (dst, src)."""

    def get(idx):
        return x_online[idx] if idx >= 0 else x_offline[n_off + idx]

    x_off2, x_on2 = list(x_offline), list(x_online)
    for dst, src in mapping:
        v = get(src)
        if dst >= 0:
            x_on2[dst] = v
        else:
            x_off2[n_off + dst] = v
    return x_off2, x_on2


def check_instance(
    schedule: RuleSchedule,
    spec: StrategySpec,
    x_offline,
    x_online,
    t: int,
    rng: np.random.Generator | None = None,
    max_enumerate: int = 5,
    samples: int = 40,
) -> tuple[bool, Witness | None]:
    """Check one instance; returns (checked, witness).

    checked is False when the time-t point is unselected or the augmented
    set has fewer than two members, in which case there is nothing to
    permute.  Sets up to max_enumerate members are checked against every
    permutation; larger sets against all transpositions plus a sample.
    """
    if spec.kind is StrategyKind.EXPRESS_M:
        raise ConfigurationError(
            "the merge strategy inherits its guarantee from its two arms; "
            "check s_fix and express instead"
        )
    base = augmented_selection(schedule, spec, x_offline, x_online, t)
    if t not in base or len(base) < 2:
        return False, None
    idx = sorted(base)
    n_off = len(x_offline)

    def candidate_mappings():
        if len(idx) <= max_enumerate:
            for perm in itertools.permutations(idx):
                if perm != tuple(idx):
                    yield tuple(zip(idx, perm))
        else:
            for a, b in itertools.combinations(idx, 2):
                yield ((a, b), (b, a))
            gen = rng or np.random.default_rng(0)
            for _ in range(samples):
                perm = list(idx)
                gen.shuffle(perm)
                if tuple(perm) != tuple(idx):
                    yield tuple(zip(idx, perm))

    for mapping in candidate_mappings():
        x_off2, x_on2 = _apply_mapping(x_offline, x_online, mapping, n_off)
        got = augmented_selection(schedule, spec, x_off2, x_on2, t)
        if got != base:
            return True, Witness(
                x_offline=tuple(x_offline),
                x_online=tuple(x_online),
                t=t,
                mapping=mapping,
                expected=base,
                got=got,
            )
    return True, None


_TAU0 = (1.0, -1.0, 2.0, -2.0, 4.0)
_TAU1 = (0.5, 1.0, 1.5)


def _random_instance(rng: np.random.Generator):
    n_off = int(rng.integers(0, 4))
    n_on = int(rng.integers(2, 7))
    family = (
        RuleFamily.RUNNING_COUNT_THRESHOLD
        if rng.random() < 0.7
        else RuleFamily.SHIFTED_THRESHOLD
    )
    past = RuleSpec(
        family,
        tau0=float(_TAU0[rng.integers(0, len(_TAU0))]),
        tau1=float(_TAU1[rng.integers(0, len(_TAU1))]),
    )
    if rng.random() < 0.2:
        schedule = RuleSchedule(
            past,
            test=RuleSpec(RuleFamily.COUNT_GATE, tau1=float(rng.integers(0, n_on - 1))),
            terminal_time=n_on - 1,
        )
    else:
        schedule = RuleSchedule(past)
    if rng.random() < 0.5:
        x_off = rng.uniform(-0.5, 2.5, n_off)
        x_on = rng.uniform(-0.5, 2.5, n_on)
    else:
        x_off = rng.integers(-2, 10, n_off) / 4.0
        x_on = rng.integers(-2, 10, n_on) / 4.0
    return schedule, list(x_off), list(x_on), n_on - 1


def verify_strategy(
    spec: StrategySpec, instances: int = 200, seed: int = 0
) -> VerificationReport:
    """Search random small instances for permutation-invariance failures."""
    rng = np.random.default_rng(seed)
    report = VerificationReport(label=spec.label, instances=instances)
    for _ in range(instances):
        schedule, x_off, x_on, t = _random_instance(rng)
        checked, witness = check_instance(schedule, spec, x_off, x_on, t, rng=rng)
        if not checked:
            continue
        report.checked += 1
        if witness is not None:
            report.violations += 1
            if report.witness is None:
                report.witness = witness
    return report


def rank_histogram(
    schedule: RuleSchedule,
    spec: StrategySpec,
    n_offline: int,
    n_online: int,
    replicates: int,
    seed: int = 0,
) -> dict[int, np.ndarray]:
    """Rank counts of the test score within its augmented set, keyed by
    calibration size.

    Data follow the standard model: x uniform on [0, 2], y = x + noise of
    variance x/2.  Only the final time is inspected.  With a symmetric
    strategy the rank is uniform on 1..m+1 for every m.
    """
    rng = np.random.default_rng(seed)
    t = n_online - 1
    hists: dict[int, np.ndarray] = {}
    for _ in range(replicates):
        x_off = rng.uniform(0, 2, n_offline)
        x_on = rng.uniform(0, 2, n_online)
        y_off = x_off + rng.standard_normal(n_offline) * np.sqrt(x_off / 2)
        y_on = x_on + rng.standard_normal(n_online) * np.sqrt(x_on / 2)
        ledger = RuleLedger(schedule)
        for j in range(t + 1):
            rule = ledger.open_next()
            ledger.record(rule(x_on[j]))
        if ledger.decisions[t] != 1:
            continue
        mask = calibration_mask(spec.kind, t, x_off, x_on, x_on[t], ledger, k=spec.k)
        pool = np.concatenate(
            [np.abs(x_off - y_off), np.abs(x_on[:t] - y_on[:t])]
        )
        cal = pool[mask]
        m = cal.size
        rank = 1 + int((cal < abs(x_on[t] - y_on[t])).sum())
        if m not in hists:
            hists[m] = np.zeros(m + 1, dtype=np.int64)
        hists[m][rank - 1] += 1
    return hists


def uniformity_pvalue(hists: dict[int, np.ndarray], min_count: int = 200) -> float:
    """Chi-square p-value for rank uniformity, combined over calibration
    sizes with enough mass.  Small-count sizes are skipped."""
    stat = 0.0
    dof = 0
    for m, counts in sorted(hists.items()):
        n = counts.sum()
        if n < min_count or m == 0:
            continue
        expected = n / (m + 1)
        stat += float(((counts - expected) ** 2 / expected).sum())
        dof += m
    if dof == 0:
        return float("nan")
    return float(stats.chi2.sf(stat, dof))
