import csv
import math

import pytest

try:
    import scl_figures  # noqa: F401
except ImportError:
    # the rendering package is optional; without it there is nothing to test
    collect_ignore_glob = ["test_fig_*.py"]

HEADER = ("t", "strategy", "metric", "value", "stderr", "n_replicates")

TERMINAL_LABELS = ("FULL", "S-FULL", "S-FIX", "ADA", "EXPRESS", "10-EXPRESS", "EXPRESS-M")
CURVE_LABELS = ("S-FIX", "EXPRESS", "FULL")


def write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HEADER)
        writer.writerows(rows)
    return path


@pytest.fixture
def terminal_csvs(tmp_path):
    """One file per strategy with metrics at a single terminal time."""
    paths = []
    for i, label in enumerate(TERMINAL_LABELS):
        rows = [
            (19, label, "miscoverage", 0.4 + 0.01 * i, 0.003, 20000),
            (19, label, "calib_size", 10.0 + 2 * i, 0.0, 20000),
            (19, label, "median_length", 3.0 + 0.1 * i, 0.02, 20000),
            (19, label, "infinite_fraction", 0.02 * i, 0.001, 20000),
        ]
        paths.append(write_rows(tmp_path / f"{label}.csv", rows))
    return paths


@pytest.fixture
def curve_csvs(tmp_path):
    """One file per strategy with full per-time trajectories."""
    paths = []
    for i, label in enumerate(CURVE_LABELS):
        rows = []
        for t in range(30):
            rows += [
                (t, label, "fcr", 0.3 + 0.002 * t + 0.01 * i, 0.004, 5000),
                (t, label, "calib_size", 10.0 + t * (1 + i), 0.0, 5000),
                (t, label, "infinite_fraction", max(0.0, 0.2 - 0.01 * t), 0.002, 5000),
                # early times have too few points for a finite median
                (t, label, "median_length", math.inf if t < 3 else 2.0 + 0.05 * t, 0.01, 5000),
            ]
        paths.append(write_rows(tmp_path / f"{label}.csv", rows))
    return paths
