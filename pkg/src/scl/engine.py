"""Vectorized batch engine.

Runs many replicates of one stream configuration at once.  Threshold-family
rules order every candidate against the realized thresholds, so two points
agree with all past rules exactly when the same number of thresholds lies
on their selected side; matching masks reduce to running count comparisons
that are maintained incrementally across time.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import math

import numpy as np

from scl.rules import ConfigurationError, RuleFamily, RuleSchedule
from scl.strategies import StrategyKind, StrategySpec, express_m_levels

__all__ = ["BatchTracks", "run_batch", "batch_decisions", "index_tables"]

_TABLE_CACHE: dict[tuple[float, int], tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def index_tables(alpha: float, max_m: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Order-statistic index tables for m = 0..max_m at one level.

    Returns (k_det, k_lo, gap): the deterministic index, the randomized
    index at u = 0, and the exact u-cutoff above which the randomized
    index steps up by one.  Computed in rational arithmetic once and
    cached; the batch paths then run on plain arrays.
    """
    key = (float(alpha), int(max_m))
    hit = _TABLE_CACHE.get(key)
    if hit is not None:
        return hit
    a = Fraction(alpha)
    if not 0 < a < 1:
        raise ConfigurationError(f"alpha must lie in (0, 1), got {alpha}")
    k_det = np.empty(max_m + 1, dtype=np.int64)
    k_lo = np.empty(max_m + 1, dtype=np.int64)
    gap = np.empty(max_m + 1, dtype=np.float64)
    for m in range(max_m + 1):
        q = (m + 1) * (1 - a)
        k_det[m] = m + 1 - math.floor(a * (m + 1))
        ceil_q = math.ceil(q)
        k_lo[m] = ceil_q - 1
        # largest float <= the exact cutoff, so that the float comparison
        # u > gap agrees with the rational comparison for every float u
        g_exact = ceil_q - q
        g = float(g_exact)
        if Fraction(g) > g_exact:
            g = math.nextafter(g, -math.inf)
        gap[m] = g
    out = (k_det, k_lo, gap)
    _TABLE_CACHE[key] = out
    return out


@dataclass
class BatchTracks:
    """Per-replicate, per-time interval outcomes for one strategy."""

    reported: np.ndarray  # (R, T) bool
    covered: np.ndarray  # (R, T) int8, -1 where not reported
    size: np.ndarray  # (R, T) int32, -1 where not reported
    length: np.ndarray  # (R, T) float32, nan where not reported
    infinite: np.ndarray  # (R, T) bool
    empty: np.ndarray  # (R, T) bool

    @classmethod
    def blank(cls, r: int, t: int) -> "BatchTracks":
        return cls(
            reported=np.zeros((r, t), dtype=bool),
            covered=np.full((r, t), -1, dtype=np.int8),
            size=np.full((r, t), -1, dtype=np.int32),
            length=np.full((r, t), np.nan, dtype=np.float32),
            infinite=np.zeros((r, t), dtype=bool),
            empty=np.zeros((r, t), dtype=bool),
        )


def _family_step(spec, csum):
    """Realized threshold (or constant decision) for one family given the
    running selection counts.  Returns (kind, values)."""
    if spec.family is RuleFamily.RUNNING_COUNT_THRESHOLD:
        return "below", spec.tau1 + csum / spec.tau0
    if spec.family is RuleFamily.SHIFTED_THRESHOLD:
        return "above", spec.tau1 - np.minimum(csum / spec.tau0, 2.0)
    if spec.family is RuleFamily.COUNT_GATE:
        return "const", (csum > spec.tau1).astype(np.int8)
    if spec.family is RuleFamily.CONSTANT_ONE:
        return "const", np.ones_like(csum, dtype=np.int8)
    raise ConfigurationError(
        f"the batch engine supports threshold families only, got {spec.family}"
    )


def _side(x, theta, direction):
    if direction == "below":
        return x < theta
    return x > theta


def batch_decisions(schedule: RuleSchedule, x_online: np.ndarray) -> np.ndarray:
    """Selection decisions for every replicate, (R, n_on) int8.

    The same realized-rule process as run_batch, without interval work;
    used by procedures that only need the selection stream.
    """
    R, n_on = x_online.shape
    csum = np.zeros(R, dtype=np.int64)
    decisions = np.zeros((R, n_on), dtype=np.int8)
    for t in range(n_on):
        kind, value = _family_step(schedule.spec_at(t), csum)
        if kind == "const":
            sel = value.astype(np.int8)
        else:
            sel = _side(x_online[:, t], value, kind).astype(np.int8)
        decisions[:, t] = sel
        csum += sel
    return decisions


def _masked_kth(sorted_scores, order, mask, k):
    """k-th smallest masked score per row; +inf where k exceeds the mask
    count.  k >= 1 is required (k has been floored elsewhere)."""
    mask_ord = np.take_along_axis(mask, order, axis=1)
    csum = np.cumsum(mask_ord, axis=1)
    m = csum[:, -1] if csum.shape[1] else np.zeros(len(mask), dtype=int)
    pos = (csum >= k[:, None]).argmax(axis=1) if csum.shape[1] else np.zeros(len(mask), dtype=int)
    vals = (
        np.take_along_axis(sorted_scores, pos[:, None], axis=1)[:, 0]
        if sorted_scores.shape[1]
        else np.zeros(len(mask))
    )
    return np.where(k <= m, vals, np.inf)


class _Radius:
    """Radius evaluation at one level over one sorted pool view."""

    def __init__(self, tables, sorted_scores, order):
        self.sorted_scores = sorted_scores
        self.order = order
        self.k_det, self.k_lo, self.gap = tables

    def __call__(self, mask, u=None):
        """Returns (radius, empty): +inf radius for undersized pools; the
        empty flag can only fire with randomization."""
        m = mask.sum(axis=1)
        if u is None:
            k = self.k_det[m]
        else:
            k = self.k_lo[m] + (u > self.gap[m])
        empty = k <= 0
        k_safe = np.maximum(k, 1)
        radius = _masked_kth(self.sorted_scores, self.order, mask, k_safe)
        radius = np.where(empty, np.nan, radius)
        return radius, empty


def run_batch(
    schedule: RuleSchedule,
    strategies: Sequence[StrategySpec],
    alpha: float,
    x_offline: np.ndarray,
    y_offline: np.ndarray,
    x_online: np.ndarray,
    y_online: np.ndarray,
    u: np.ndarray | None = None,
    mu: Callable[[np.ndarray], np.ndarray] | None = None,
    report: str = "all",
) -> tuple[np.ndarray, dict[str, BatchTracks]]:
    """Run all replicates of one configuration.

    Parameters
    ----------
    x_offline, y_offline : arrays of shape (R, n_off)
    x_online, y_online : arrays of shape (R, n_on)
    u : array of shape (R, n_on, arms), optional
        Uniform draws for tie randomization, one slot per interval arm in
        strategy order (merges take two).  Omit for the deterministic
        construction.
    report : "all" or "terminal"
        Whether interval outcomes are evaluated at every selected time or
        only at the last one.

    Returns
    -------
    (decisions, tracks) : decisions is (R, n_on) int8; tracks maps each
    strategy label to its BatchTracks.
    """
    if report not in ("all", "terminal"):
        raise ConfigurationError(f"report must be 'all' or 'terminal', got {report!r}")
    R, n_on = x_online.shape
    n_off = x_offline.shape[1] if x_offline.size else 0
    arms = sum(2 if s.kind is StrategyKind.EXPRESS_M else 1 for s in strategies)
    if u is not None and u.shape != (R, n_on, arms):
        raise ConfigurationError(
            f"u must have shape ({R}, {n_on}, {arms}), got {u.shape}"
        )
    pool_n = n_off + n_on
    if mu is None:
        pred_off, pred_on = x_offline, x_online
    else:
        pred_off, pred_on = mu(x_offline), mu(x_online)
    scores_off = np.abs(pred_off - y_offline)
    scores_on = np.abs(pred_on - y_online)
    pool_x = np.concatenate([x_offline, x_online], axis=1)
    pool_scores = np.concatenate([scores_off, scores_on], axis=1)

    k_windows = sorted({s.k for s in strategies if s.kind is StrategyKind.K_EXPRESS})
    needs_match = any(
        s.kind in (StrategyKind.EXPRESS, StrategyKind.K_EXPRESS, StrategyKind.EXPRESS_M)
        for s in strategies
    )

    csum = np.zeros(R, dtype=np.int64)
    decisions = np.zeros((R, n_on), dtype=np.int8)
    thetas = np.full((R, n_on), np.nan)
    theta_live = np.zeros(n_on, dtype=bool)  # comparison rules only
    cnt_all = np.zeros((R, pool_n), dtype=np.int32) if needs_match else None
    cnt_win = {k: np.zeros((R, pool_n), dtype=np.int32) for k in k_windows}

    tracks = {s.label: BatchTracks.blank(R, n_on) for s in strategies}
    report_times = range(n_on) if report == "all" else (n_on - 1,)
    report_set = set(report_times)
    tables = {alpha: index_tables(alpha, pool_n)}
    if any(s.kind is StrategyKind.EXPRESS_M for s in strategies):
        a_fix, a_exp = express_m_levels(alpha, n_on)
        tables[a_fix] = index_tables(a_fix, pool_n)
        tables[a_exp] = index_tables(a_exp, pool_n)
    else:
        a_fix = a_exp = None
    direction = None

    for t in range(n_on):
        kind, value = _family_step(schedule.spec_at(t), csum)
        if kind == "const":
            sel = value.astype(np.int8)
        else:
            direction = direction or kind
            if kind != direction:
                raise ConfigurationError(
                    "mixed threshold directions in one stream are not supported"
                )
            thetas[:, t] = value
            theta_live[t] = True
            sel = _side(x_online[:, t], value, kind).astype(np.int8)
        decisions[:, t] = sel

        if t in report_set:
            _report_time(
                t,
                sel,
                kind,
                value,
                direction,
                strategies,
                alpha,
                a_fix,
                a_exp,
                tables,
                n_off,
                pool_x,
                pool_scores,
                scores_on,
                decisions,
                thetas,
                theta_live,
                cnt_all,
                cnt_win,
                u,
                tracks,
            )

        if kind != "const":
            step = _side(pool_x, value[:, None], kind)
            if needs_match:
                cnt_all += step
            for k, cw in cnt_win.items():
                cw += step
                drop = t - k
                if drop >= 0 and theta_live[drop]:
                    cw -= _side(pool_x, thetas[:, drop][:, None], direction)
        csum += sel

    return decisions, tracks


def _report_time(
    t,
    sel,
    rule_kind,
    rule_value,
    direction,
    strategies,
    alpha,
    a_fix,
    a_exp,
    tables,
    n_off,
    pool_x,
    pool_scores,
    scores_on,
    decisions,
    thetas,
    theta_live,
    cnt_all,
    cnt_win,
    u,
    tracks,
):
    """Evaluate every strategy's interval at one time for the selected rows."""
    rows = np.nonzero(sel == 1)[0]
    if rows.size == 0:
        return
    P = n_off + t
    px = pool_x[rows, :P]
    ps = pool_scores[rows, :P]
    order = np.argsort(ps, axis=1, kind="stable")
    sorted_scores = np.take_along_axis(ps, order, axis=1)
    y_score = scores_on[rows, t]

    # the rule of time t applied to every pool candidate
    if rule_kind == "const":
        sel_ind = np.ones((rows.size, P), dtype=bool)
    else:
        sel_ind = _side(px, rule_value[rows, None], rule_kind)

    # matching counts against the realized comparison rules of times < t
    if cnt_all is not None:
        match_all = cnt_all[rows, :P] == cnt_all[rows, n_off + t][:, None]
    else:
        match_all = None
    match_win = {}
    for k, cw in cnt_win.items():
        match_win[k] = cw[rows, :P] == cw[rows, n_off + t][:, None]

    # rule-of-time-j values at the test feature, for the adaptive strategy
    ada_match = None
    if any(s.kind is StrategyKind.ADA for s in strategies):
        ada_match = np.ones((rows.size, P), dtype=bool)
        if t:
            live = theta_live[:t]
            hist = decisions[rows, :t] == 1
            x_t = pool_x[rows, n_off + t][:, None]
            side_t = np.zeros((rows.size, t), dtype=bool)
            if live.any():
                side_t[:, live] = _side(x_t, thetas[rows][:, :t][:, live], direction)
            # constant rules always agree with their own decision
            agree = np.where(live[None, :], side_t == hist, True)
            ada_match[:, n_off:] = agree

    masks = {}
    for spec in strategies:
        kind = spec.kind
        if kind is StrategyKind.FULL:
            masks[spec] = np.ones((rows.size, P), dtype=bool)
        elif kind is StrategyKind.S_FULL:
            masks[spec] = sel_ind.copy()
        elif kind is StrategyKind.S_FIX:
            m = np.zeros((rows.size, P), dtype=bool)
            m[:, :n_off] = sel_ind[:, :n_off]
            masks[spec] = m
        elif kind is StrategyKind.ADA:
            m = sel_ind & ada_match
            masks[spec] = m
        elif kind is StrategyKind.EXPRESS:
            masks[spec] = sel_ind & match_all
        elif kind is StrategyKind.K_EXPRESS:
            m = sel_ind & match_win[spec.k]
            if t - spec.k > 0:
                m[:, n_off : n_off + (t - spec.k)] = False
            masks[spec] = m
        elif kind is StrategyKind.EXPRESS_M:
            fix = np.zeros((rows.size, P), dtype=bool)
            fix[:, :n_off] = sel_ind[:, :n_off]
            masks[spec] = (fix, sel_ind & match_all)

    arm = 0
    radius_main = _Radius(tables[alpha], sorted_scores, order)
    for spec in strategies:
        rec = tracks[spec.label]
        if spec.kind is StrategyKind.EXPRESS_M:
            fix_mask, exp_mask = masks[spec]
            r_fix = _Radius(tables[a_fix], sorted_scores, order)
            r_exp = _Radius(tables[a_exp], sorted_scores, order)
            u1 = u[rows, t, arm] if u is not None else None
            u2 = u[rows, t, arm + 1] if u is not None else None
            rad1, empty1 = r_fix(fix_mask, u1)
            rad2, empty2 = r_exp(exp_mask, u2)
            empty = empty1 | empty2
            radius = np.where(empty, np.nan, np.minimum(rad1, rad2))
            size = (fix_mask | exp_mask).sum(axis=1)
            arm += 2
        else:
            uu = u[rows, t, arm] if u is not None else None
            radius, empty = radius_main(masks[spec], uu)
            size = masks[spec].sum(axis=1)
            arm += 1
        covered = np.where(empty, False, y_score <= radius)
        length = np.where(empty, 0.0, 2.0 * radius)
        rec.reported[rows, t] = True
        rec.covered[rows, t] = covered.astype(np.int8)
        rec.size[rows, t] = size
        rec.length[rows, t] = length.astype(np.float32)
        rec.infinite[rows, t] = np.isinf(radius) & ~empty
        rec.empty[rows, t] = empty
