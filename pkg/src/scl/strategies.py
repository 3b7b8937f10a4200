"""Calibration selection strategies.

Each strategy maps the candidate pool at a reported time t (offline points
plus the online points of times 0..t-1) to a boolean calibration mask,
using only the realized rule ledger and the candidate features.  Labels
never enter the masks.
"""

from __future__ import annotations

import enum
import math
from typing import Sequence

import numpy as np

from scl.rules import ConfigurationError, RuleLedger

__all__ = [
    "StrategyKind",
    "StrategySpec",
    "calibration_mask",
    "express_m_levels",
    "strategy_label",
]


class StrategyKind(str, enum.Enum):
    FULL = "full"
    S_FULL = "s_full"
    S_FIX = "s_fix"
    ADA = "ada"
    EXPRESS = "express"
    K_EXPRESS = "k_express"
    EXPRESS_M = "express_m"


# CSV / figure labels
_LABELS = {
    StrategyKind.FULL: "FULL",
    StrategyKind.S_FULL: "S-FULL",
    StrategyKind.S_FIX: "S-FIX",
    StrategyKind.ADA: "ADA",
    StrategyKind.EXPRESS: "EXPRESS",
    StrategyKind.EXPRESS_M: "EXPRESS-M",
}


class StrategySpec:
    """A strategy kind plus its window size where one applies."""

    def __init__(self, kind: StrategyKind, k: int | None = None):
        self.kind = StrategyKind(kind)
        if self.kind is StrategyKind.K_EXPRESS:
            if k is None or k < 1:
                raise ConfigurationError("k_express needs a window size k >= 1")
        elif k is not None:
            raise ConfigurationError(f"{self.kind.value} takes no window size")
        self.k = k

    @property
    def label(self) -> str:
        return strategy_label(self.kind, self.k)

    def __repr__(self):
        return f"StrategySpec({self.label})"

    def __eq__(self, other):
        return (
            isinstance(other, StrategySpec)
            and (self.kind, self.k) == (other.kind, other.k)
        )

    def __hash__(self):
        return hash((self.kind, self.k))


def strategy_label(kind: StrategyKind, k: int | None = None) -> str:
    if kind is StrategyKind.K_EXPRESS:
        return f"{k}-EXPRESS"
    return _LABELS[kind]


def _matches(ledger: RuleLedger, times: range, x_j: float, x_t: float) -> bool:
    return all(ledger.entries[i](x_j) == ledger.entries[i](x_t) for i in times)


def calibration_mask(
    kind: StrategyKind,
    t: int,
    x_offline: Sequence[float],
    x_online: Sequence[float],
    x_test: float,
    ledger: RuleLedger,
    k: int | None = None,
) -> np.ndarray:
    """Boolean calibration mask over the pool [offline..., online 0..t-1].

    Requires the ledger to hold realized rules for times 0..t; the test
    point's own index is not part of the pool (it joins the augmented set
    at interval time).
    """
    if len(ledger.entries) < t + 1:
        raise ConfigurationError(f"ledger has no realized rule for time {t}")
    if len(x_online) < t:
        raise ConfigurationError(f"need {t} online candidates, got {len(x_online)}")
    n_off = len(x_offline)
    pool = list(x_offline) + list(x_online[:t])
    s_t = ledger.entries[t]
    mask = np.zeros(n_off + t, dtype=bool)

    if kind is StrategyKind.FULL:
        mask[:] = True
        return mask
    if kind is StrategyKind.S_FULL:
        for j, x in enumerate(pool):
            mask[j] = bool(s_t(x))
        return mask
    if kind is StrategyKind.S_FIX:
        for j in range(n_off):
            mask[j] = bool(s_t(pool[j]))
        return mask
    if kind is StrategyKind.ADA:
        for j in range(n_off):
            mask[j] = bool(s_t(pool[j]))
        for j in range(t):
            x_j = x_online[j]
            mask[n_off + j] = bool(s_t(x_j)) and ledger.decisions[j] == ledger.entries[j](
                x_test
            )
        return mask
    if kind is StrategyKind.EXPRESS:
        times = range(t)
        for j, x in enumerate(pool):
            mask[j] = bool(s_t(x)) and _matches(ledger, times, x, x_test)
        return mask
    if kind is StrategyKind.K_EXPRESS:
        if k is None or k < 1:
            raise ConfigurationError("k_express needs a window size k >= 1")
        window = range(max(0, t - k), t)
        for j in range(n_off):
            x = pool[j]
            mask[j] = bool(s_t(x)) and _matches(ledger, window, x, x_test)
        for j in range(max(0, t - k), t):
            x = x_online[j]
            mask[n_off + j] = bool(s_t(x)) and _matches(ledger, window, x, x_test)
        return mask
    if kind is StrategyKind.EXPRESS_M:
        raise ConfigurationError(
            "express_m merges two intervals; build its arm masks with "
            "s_fix and express instead"
        )
    raise ConfigurationError(f"unknown strategy kind: {kind!r}")


def express_m_levels(alpha: float, horizon: int) -> tuple[float, float]:
    """Uneven level split for the interval merge over a stream horizon.

    The stricter pool strategy runs at alpha / sqrt(T) and the matching
    strategy at the remainder, so the intersection spends alpha in total.
    """
    if horizon < 2:
        raise ConfigurationError("the merge needs a stream horizon of at least 2")
    frac = 1.0 / math.sqrt(horizon)
    return alpha * frac, alpha * (1.0 - frac)
