"""Online FCR baselines built on a fixed offline calibration pool.

Both procedures watch the same selection stream as the strategies but
never calibrate on online points.  One spends a summable level budget
across selections so that the cumulative level spent never exceeds the
target times the number of selections; the other moves a working level
up after each covered interval and down after each miss, which pins the
realized false coverage proportion to the target at a 1/T rate.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from scl.core import threshold_index
from scl.engine import BatchTracks, batch_decisions
from scl.rules import ConfigurationError, RuleSchedule

__all__ = ["LORD_LABEL", "ACI_LABEL", "spend_schedule", "run_lord_ci", "run_aci"]

LORD_LABEL = "LORD-CI"
ACI_LABEL = "ACI"

# 6/pi^2: normalizes sum(1/i^2) to one, so the budget is never exhausted
_BASEL = 6.0 / math.pi**2


def spend_schedule(alpha: float, n: int) -> np.ndarray:
    """Level spent at the i-th selection, i = 1..n: alpha * (6/pi^2) / i^2."""
    i = np.arange(1, n + 1, dtype=np.float64)
    return alpha * _BASEL / (i * i)


def _prepare(x_offline, y_offline, x_online, y_online, mu):
    if x_offline.shape[1] == 0:
        sorted_off = np.empty_like(x_offline)
    else:
        pred = x_offline if mu is None else mu(x_offline)
        sorted_off = np.sort(np.abs(pred - y_offline), axis=1)
    pred_on = x_online if mu is None else mu(x_online)
    scores_on = np.abs(pred_on - y_online)
    return sorted_off, scores_on


def _record(tracks, rows, t, radius, empty, score):
    covered = np.where(empty, False, score <= radius)
    tracks.reported[rows, t] = True
    tracks.covered[rows, t] = covered.astype(np.int8)
    tracks.length[rows, t] = np.where(empty, 0.0, 2.0 * radius).astype(np.float32)
    tracks.infinite[rows, t] = np.isinf(radius) & ~empty
    tracks.empty[rows, t] = empty


def run_lord_ci(
    schedule: RuleSchedule,
    alpha: float,
    x_offline: np.ndarray,
    y_offline: np.ndarray,
    x_online: np.ndarray,
    y_online: np.ndarray,
    mu: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[np.ndarray, BatchTracks, np.ndarray]:
    """Budget-spending baseline.

    Each selection consumes the next term of a summable schedule, so for
    every horizon the total level spent stays below alpha times the
    selection count.  Intervals are offline-pool conformal at the spent
    level; late selections get tiny levels and hence infinite intervals.

    Returns (decisions, tracks, spend) where spend[r, t] is the level
    consumed at time t (zero at unselected times).
    """
    if not 0 < alpha < 1:
        raise ConfigurationError(f"alpha must lie in (0, 1), got {alpha}")
    R, n_on = x_online.shape
    m = x_offline.shape[1]
    sorted_off, scores_on = _prepare(x_offline, y_offline, x_online, y_online, mu)
    decisions = batch_decisions(schedule, x_online)

    levels = spend_schedule(alpha, n_on)
    # radius index by selection ordinal, exact at each spent level
    k_by_ordinal = np.array(
        [threshold_index(m, float(a)) for a in levels], dtype=np.int64
    )
    ordinal = np.cumsum(decisions, axis=1, dtype=np.int64)  # includes time t

    tracks = BatchTracks.blank(R, n_on)
    spend = np.zeros((R, n_on))
    for t in range(n_on):
        rows = np.nonzero(decisions[:, t] == 1)[0]
        if rows.size == 0:
            continue
        i = ordinal[rows, t]
        spend[rows, t] = levels[i - 1]
        k = k_by_ordinal[i - 1]
        finite = k <= m
        radius = np.full(rows.size, np.inf)
        if m and finite.any():
            radius[finite] = sorted_off[rows[finite], k[finite] - 1]
        empty = np.zeros(rows.size, dtype=bool)
        tracks.size[rows, t] = m
        _record(tracks, rows, t, radius, empty, scores_on[rows, t])
    return decisions, tracks, spend


def run_aci(
    schedule: RuleSchedule,
    alpha: float,
    x_offline: np.ndarray,
    y_offline: np.ndarray,
    x_online: np.ndarray,
    y_online: np.ndarray,
    gamma: float = 0.005,
    mu: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[np.ndarray, BatchTracks]:
    """Adaptive-level baseline.

    A working level starts at alpha and moves by gamma * (alpha - err)
    after each reported interval, where err indicates a miss.  Levels at
    or below zero produce the infinite interval (err 0); levels at or
    above one produce the empty interval (err 1).  Updating only at
    reported times makes the running false coverage proportion track
    alpha at rate 1/(gamma * #selections), deterministically.
    """
    if not 0 < alpha < 1:
        raise ConfigurationError(f"alpha must lie in (0, 1), got {alpha}")
    if gamma <= 0:
        raise ConfigurationError(f"gamma must be positive, got {gamma}")
    R, n_on = x_online.shape
    m = x_offline.shape[1]
    sorted_off, scores_on = _prepare(x_offline, y_offline, x_online, y_online, mu)
    decisions = batch_decisions(schedule, x_online)

    state = np.full(R, alpha)
    tracks = BatchTracks.blank(R, n_on)
    for t in range(n_on):
        rows = np.nonzero(decisions[:, t] == 1)[0]
        if rows.size == 0:
            continue
        a_t = state[rows]
        empty = a_t >= 1.0
        inner = ~empty & (a_t > 0.0)
        radius = np.full(rows.size, np.inf)
        if m and inner.any():
            k = m + 1 - np.floor(a_t[inner] * (m + 1)).astype(np.int64)
            ok = k <= m
            sub = np.full(inner.sum(), np.inf)
            sub[ok] = sorted_off[rows[inner][ok], k[ok] - 1]
            radius[inner] = sub
        tracks.size[rows, t] = m
        _record(tracks, rows, t, radius, empty, scores_on[rows, t])
        err = 1.0 - tracks.covered[rows, t]
        state[rows] = a_t + gamma * (alpha - err)
    return decisions, tracks
