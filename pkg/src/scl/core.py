"""Split-conformal primitives: order-statistic indices, intervals, p-values.

All index arithmetic is done in exact rational arithmetic so that the
interval / p-value duality holds for every representable level, not just
up to floating-point rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "PredictionInterval",
    "threshold_index",
    "smoothed_threshold_index",
    "conformal_radius",
    "smoothed_radius",
    "prediction_interval",
    "conformal_pvalue",
    "empirical_quantile",
    "EMPTY_INTERVAL",
    "FULL_INTERVAL",
]

INF = float("inf")


@dataclass(frozen=True)
class PredictionInterval:
    """Closed interval [lower, upper]; lower > upper encodes the empty set."""

    lower: float
    upper: float

    def contains(self, y: float) -> bool:
        return self.lower <= y <= self.upper

    @property
    def length(self) -> float:
        return max(0.0, self.upper - self.lower)

    @property
    def is_empty(self) -> bool:
        return self.upper < self.lower

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.length)

    def intersect(self, other: "PredictionInterval") -> "PredictionInterval":
        return PredictionInterval(
            max(self.lower, other.lower), min(self.upper, other.upper)
        )


EMPTY_INTERVAL = PredictionInterval(INF, -INF)
FULL_INTERVAL = PredictionInterval(-INF, INF)


def threshold_index(m: int, alpha: float) -> int:
    """Index of the calibration order statistic used as interval radius.

    Returns the smallest integer k with k >= (1 - alpha) * (m + 1).  When
    k > m the calibration set is too small to support a finite interval at
    this level.

    Parameters
    ----------
    m : int
        Number of calibration scores (may be 0).
    alpha : float
        Target miscoverage level in (0, 1).
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if m < 0:
        raise ValueError(f"calibration count must be nonnegative, got {m}")
    # k = m + 1 - floor(alpha (m + 1)), exact in the binary value of alpha
    return m + 1 - math.floor(Fraction(alpha) * (m + 1))


def smoothed_threshold_index(m: int, alpha: float, u: float) -> int:
    """Tie-randomized variant of :func:`threshold_index`.

    Returns the largest integer k with k < (m + 1) * (1 - alpha) + u, where
    u ~ Unif(0, 1) is drawn once per reported interval.  The result may be 0
    (empty interval) or m + 1 (infinite radius).  Averaged over u, the
    interval misses with probability exactly alpha for every m.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0 <= u <= 1:
        raise ValueError(f"u must lie in [0, 1], got {u}")
    q = (m + 1) * (1 - Fraction(alpha)) + Fraction(u)
    return math.ceil(q) - 1


def _kth_smallest(scores: np.ndarray, k: int) -> float:
    # k is 1-based; callers guarantee 1 <= k <= len(scores)
    return float(np.partition(scores, k - 1)[k - 1])


def conformal_radius(scores, alpha: float) -> float:
    """Deterministic split-conformal radius from calibration scores.

    The k-th smallest score for k = threshold_index(m, alpha), or +inf when
    k exceeds the number of scores (in particular for an empty set).
    """
    arr = np.asarray(scores, dtype=float)
    k = threshold_index(arr.size, alpha)
    if k > arr.size:
        return INF
    return _kth_smallest(arr, k)


def smoothed_radius(scores, alpha: float, u: float) -> float | None:
    """Tie-randomized radius; None encodes the empty interval."""
    arr = np.asarray(scores, dtype=float)
    k = smoothed_threshold_index(arr.size, alpha, u)
    if k <= 0:
        return None
    if k > arr.size:
        return INF
    return _kth_smallest(arr, k)


def prediction_interval(
    center: float, scores, alpha: float, u: float | None = None
) -> PredictionInterval:
    """Interval centered at a point prediction with conformal radius.

    With u omitted the deterministic construction is used; passing a
    uniform draw switches to the tie-randomized construction.
    """
    if u is None:
        r = conformal_radius(scores, alpha)
    else:
        r = smoothed_radius(scores, alpha, u)
        if r is None:
            return EMPTY_INTERVAL
    if math.isinf(r):
        return FULL_INTERVAL
    return PredictionInterval(center - r, center + r)


def conformal_pvalue(cal_scores, test_score: float) -> Fraction:
    """Rank-based p-value (1 + #{cal >= test}) / (m + 1), exact.

    Super-uniform when the augmented scores are exchangeable, and dual to
    the deterministic interval: y is covered iff the p-value of its score
    exceeds alpha.
    """
    arr = np.asarray(cal_scores, dtype=float)
    ge = int(np.count_nonzero(arr >= test_score))
    return Fraction(1 + ge, arr.size + 1)


def empirical_quantile(values, beta: float) -> float:
    """The ceil(m * beta)-th smallest of m values, for beta in (0, 1]."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("empirical quantile of an empty sample")
    if not 0 < beta <= 1:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    k = math.ceil(Fraction(beta) * arr.size)
    return _kth_smallest(arr, k)
