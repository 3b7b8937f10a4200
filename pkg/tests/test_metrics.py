"""Metric reductions: frozen small cases plus structural identities."""

import math

import numpy as np
import pytest

from scl.engine import BatchTracks, run_batch
from scl.metrics import (
    CALIB_SIZE,
    EMPTY_FRACTION,
    FCR,
    INFINITE_FRACTION,
    MEDIAN_LENGTH,
    MISCOVERAGE,
    P_ANY,
    PFCR,
    fcp_trajectories,
    mean_and_se,
    median_and_se,
    proportion_se,
    summarize,
)
from scl.rules import RuleFamily, RuleSchedule, RuleSpec
from scl.strategies import StrategyKind, StrategySpec


def test_fcp_trajectories_hand_case():
    reported = np.array([[1, 0, 1, 1], [0, 0, 0, 0]], dtype=bool)
    covered = np.array([[1, -1, 0, 1], [-1, -1, -1, -1]], dtype=np.int8)
    fcp = fcp_trajectories(reported, covered)
    assert np.allclose(fcp[0], [0.0, 0.0, 1 / 2, 1 / 3])
    assert np.array_equal(fcp[1], np.zeros(4))


def test_proportion_se_frozen():
    assert proportion_se(0.5, 100) == pytest.approx(0.05)
    assert proportion_se(0.0, 10) == 0.0
    assert math.isnan(proportion_se(0.3, 0))


def test_mean_and_se_frozen():
    mean, se = mean_and_se(np.array([1.0, 2.0, 3.0, 4.0]))
    assert mean == 2.5
    # sample sd of 1..4 is sqrt(5/3)
    assert se == pytest.approx(math.sqrt(5 / 3) / 2.0)


def test_median_with_infinite_values():
    med, se = median_and_se(np.array([1.0, 2.0, 3.0, np.inf, np.inf]))
    assert med == 3.0
    assert se == np.inf  # upper rank hits an infinite value
    med2, _ = median_and_se(np.array([1.0, 2.0, np.inf]))
    assert med2 == 2.0


def test_median_se_tracks_asymptotics():
    rng = np.random.default_rng(5)
    sample = rng.normal(0, 1, 4096)
    _, se = median_and_se(sample)
    # asymptotic se of a standard normal median is 1.2533 / sqrt(n)
    assert se == pytest.approx(1.2533 / math.sqrt(4096), rel=0.2)


def _toy_tracks():
    tracks = BatchTracks.blank(4, 3)
    # replicate 0 reports at t=0,2; replicate 1 at t=2; others never
    tracks.reported[0, 0] = tracks.reported[0, 2] = tracks.reported[1, 2] = True
    tracks.covered[0, 0] = 1
    tracks.covered[0, 2] = 0
    tracks.covered[1, 2] = 1
    tracks.size[0, 0] = 5
    tracks.size[0, 2] = 2
    tracks.size[1, 2] = 4
    tracks.length[0, 0] = 1.0
    tracks.length[0, 2] = 2.0
    tracks.length[1, 2] = np.inf
    tracks.infinite[1, 2] = True
    return tracks


def test_summarize_rows_hand_case():
    rows = summarize("X", _toy_tracks(), report="all")
    by = {(r.metric, r.t): r for r in rows}
    assert by[(MISCOVERAGE, 0)].value == 0.0
    assert by[(MISCOVERAGE, 0)].n_replicates == 1
    assert by[(MISCOVERAGE, 2)].value == 0.5
    assert by[(MISCOVERAGE, 2)].stderr == pytest.approx(math.sqrt(0.25 / 2))
    assert by[(CALIB_SIZE, 2)].value == 3.0
    assert by[(MEDIAN_LENGTH, 2)].value == np.inf
    assert by[(INFINITE_FRACTION, 2)].value == 0.5
    assert by[(EMPTY_FRACTION, 2)].value == 0.0
    assert (MISCOVERAGE, 1) not in by  # no replicate reported at t=1
    # trajectory rows exist at every time
    assert by[(P_ANY, 0)].value == 0.25
    assert by[(P_ANY, 2)].value == 0.5
    assert by[(FCR, 1)].value == 0.0
    # replicate 0 has fcp 1/2 at t=2, replicate 1 has 0
    assert by[(PFCR, 2)].value == 0.25
    assert by[(FCR, 2)].value == 0.125


def test_fcr_identity_is_exact_on_stored_values():
    rng = np.random.default_rng(31)
    sched = RuleSchedule(RuleSpec(RuleFamily.RUNNING_COUNT_THRESHOLD, tau0=2.0, tau1=1.0))
    specs = [StrategySpec(StrategyKind.S_FIX), StrategySpec(StrategyKind.EXPRESS)]
    x_off = rng.uniform(0, 2, (64, 5))
    y_off = x_off + rng.normal(0, 0.5, (64, 5))
    x_on = rng.uniform(0, 2, (64, 12))
    y_on = x_on + rng.normal(0, 0.5, (64, 12))
    _, tracks = run_batch(sched, specs, 0.4, x_off, y_off, x_on, y_on)
    for spec in specs:
        rows = summarize(spec.label, tracks[spec.label])
        by = {(r.metric, r.t): r for r in rows}
        for t in range(12):
            fcr = by[(FCR, t)].value
            p_any = by[(P_ANY, t)].value
            if (PFCR, t) in by:
                assert fcr == by[(PFCR, t)].value * p_any  # bitwise, not approx
            else:
                assert fcr == 0.0 and p_any == 0.0


def test_terminal_report_drops_trajectory_rows():
    rows = summarize("X", _toy_tracks(), report="terminal")
    metrics = {r.metric for r in rows}
    assert FCR not in metrics and PFCR not in metrics and P_ANY not in metrics
    assert {r.t for r in rows} == {2}
