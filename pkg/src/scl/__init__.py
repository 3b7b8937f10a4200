"""Online selective split-conformal inference.

Decision-driven selection rules, calibration selection strategies,
selective prediction intervals with FCR accounting, level-spending and
adaptive-level baselines, and a reproducible Monte Carlo harness.
"""

from scl.core import (
    EMPTY_INTERVAL,
    FULL_INTERVAL,
    PredictionInterval,
    conformal_pvalue,
    conformal_radius,
    empirical_quantile,
    prediction_interval,
    smoothed_radius,
    smoothed_threshold_index,
    threshold_index,
)

__version__ = "0.1.0"

__all__ = [
    "EMPTY_INTERVAL",
    "FULL_INTERVAL",
    "PredictionInterval",
    "conformal_pvalue",
    "conformal_radius",
    "empirical_quantile",
    "prediction_interval",
    "smoothed_radius",
    "smoothed_threshold_index",
    "threshold_index",
    "__version__",
]
