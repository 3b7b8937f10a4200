"""Reductions from per-replicate interval outcomes to reporting rows.

Two families of summaries: per-time cross-replicate statistics of the
reported intervals (miscoverage, calibration size, median length,
infinite fraction) and running false-coverage trajectories (FCR, its
positive-selection conditional variant, and the probability of any
selection so far).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from scl.engine import BatchTracks

__all__ = [
    "MetricRow",
    "MISCOVERAGE",
    "CALIB_SIZE",
    "MEDIAN_LENGTH",
    "INFINITE_FRACTION",
    "EMPTY_FRACTION",
    "FCR",
    "PFCR",
    "P_ANY",
    "fcp_trajectories",
    "proportion_se",
    "mean_and_se",
    "median_and_se",
    "summarize",
]

MISCOVERAGE = "miscoverage"
CALIB_SIZE = "calib_size"
MEDIAN_LENGTH = "median_length"
INFINITE_FRACTION = "infinite_fraction"
EMPTY_FRACTION = "empty_fraction"
FCR = "fcr"
PFCR = "pfcr"
P_ANY = "p_any"

_Z95 = 1.959963984540054


@dataclass(frozen=True)
class MetricRow:
    t: int
    strategy: str
    metric: str
    value: float
    stderr: float
    n_replicates: int


def fcp_trajectories(reported: np.ndarray, covered: np.ndarray) -> np.ndarray:
    """Running false-coverage proportion per replicate.

    fcp[r, t] = (# misses among reports up to t) / max(1, # reports up to t).
    """
    rep = reported.astype(np.int64)
    miss = (reported & (covered == 0)).astype(np.int64)
    n_rep = np.cumsum(rep, axis=1)
    n_miss = np.cumsum(miss, axis=1)
    return n_miss / np.maximum(n_rep, 1)


def proportion_se(p: float, n: int) -> float:
    if n <= 0:
        return math.nan
    return math.sqrt(p * (1.0 - p) / n)


def mean_and_se(values: np.ndarray) -> tuple[float, float]:
    n = values.size
    if n == 0:
        return math.nan, math.nan
    mean = float(values.mean())
    if n == 1:
        return mean, math.nan
    return mean, float(values.std(ddof=1) / math.sqrt(n))


def median_and_se(values: np.ndarray) -> tuple[float, float]:
    """Sample median with a distribution-free order-statistic error scale.

    The spread of the ranks n/2 +- z*sqrt(n)/2 is divided back by 2z, which
    recovers the asymptotic standard error of the median without a density
    estimate.  Infinite values sort to the top and are legitimate medians.
    """
    n = values.size
    if n == 0:
        return math.nan, math.nan
    ordered = np.sort(values)
    med = float(np.median(ordered))
    if n < 3:
        return med, math.nan
    half = _Z95 * math.sqrt(n) / 2.0
    lo = min(n - 1, max(0, int(math.floor((n - 1) / 2 - half))))
    hi = min(n - 1, max(0, int(math.ceil((n - 1) / 2 + half))))
    a, b = float(ordered[lo]), float(ordered[hi])
    if math.isinf(a) and math.isinf(b):
        return med, math.nan
    return med, (b - a) / (2.0 * _Z95)


def _interval_rows(label: str, tracks: BatchTracks, times: Iterable[int]):
    rows = []
    for t in times:
        sel = tracks.reported[:, t]
        n = int(sel.sum())
        if n == 0:
            continue
        covered = tracks.covered[sel, t]
        p_miss = float((covered == 0).mean())
        rows.append(MetricRow(t, label, MISCOVERAGE, p_miss, proportion_se(p_miss, n), n))
        size_mean, size_se = mean_and_se(tracks.size[sel, t].astype(float))
        rows.append(MetricRow(t, label, CALIB_SIZE, size_mean, size_se, n))
        med, med_se = median_and_se(tracks.length[sel, t].astype(float))
        rows.append(MetricRow(t, label, MEDIAN_LENGTH, med, med_se, n))
        p_inf = float(tracks.infinite[sel, t].mean())
        rows.append(
            MetricRow(t, label, INFINITE_FRACTION, p_inf, proportion_se(p_inf, n), n)
        )
        p_empty = float(tracks.empty[sel, t].mean())
        rows.append(
            MetricRow(t, label, EMPTY_FRACTION, p_empty, proportion_se(p_empty, n), n)
        )
    return rows


def _fc_rows(label: str, tracks: BatchTracks, times: Iterable[int]):
    """False-coverage trajectory rows.

    fcr is emitted as pfcr * p_any so the product identity holds exactly
    on the stored values; the two factors are plain subgroup means.
    """
    rows = []
    fcp = fcp_trajectories(tracks.reported, tracks.covered)
    any_sel = np.cumsum(tracks.reported.astype(np.int64), axis=1) > 0
    R = tracks.reported.shape[0]
    for t in times:
        pos = any_sel[:, t]
        n_pos = int(pos.sum())
        p_any = n_pos / R
        rows.append(MetricRow(t, label, P_ANY, p_any, proportion_se(p_any, R), R))
        if n_pos:
            pfcr, pfcr_se = mean_and_se(fcp[pos, t])
            rows.append(MetricRow(t, label, PFCR, pfcr, pfcr_se, n_pos))
            fcr = pfcr * p_any
        else:
            fcr = 0.0
        _, fcr_se = mean_and_se(fcp[:, t])
        rows.append(MetricRow(t, label, FCR, fcr, fcr_se, R))
    return rows


def summarize(label: str, tracks: BatchTracks, report: str = "all") -> list[MetricRow]:
    """All metric rows for one strategy's tracks.

    With report="terminal" only the final time is summarized and the
    trajectory rows are omitted (interim selections were not tracked).
    """
    n_on = tracks.reported.shape[1]
    if report == "terminal":
        return _interval_rows(label, tracks, [n_on - 1])
    times = range(n_on)
    return _interval_rows(label, tracks, times) + _fc_rows(label, tracks, times)
