"""Monte Carlo harness: chunked replicate batches, aggregation, CSV output.

Replicates are drawn in fixed chunks of 1024, each from a counter-based
generator keyed by (seed, chunk index).  Chunks land in disjoint slices
of the output arrays, so results are byte-identical for any thread
count; threads only change who fills which slice when.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from scl.baselines import ACI_LABEL, LORD_LABEL, run_aci, run_lord_ci
from scl.config import SimConfig
from scl.engine import BatchTracks, run_batch
from scl.metrics import MetricRow, summarize
from scl.rules import ConfigurationError
from scl.strategies import StrategyKind

__all__ = [
    "CHUNK",
    "CSV_COLUMNS",
    "SimOutput",
    "chunk_sizes",
    "draw_chunk",
    "resolve_threads",
    "run_simulation",
    "summary_rows",
    "write_outputs",
]

CHUNK = 1024  # replicates per draw chunk; part of the reproducibility contract
CSV_COLUMNS = ("t", "strategy", "metric", "value", "stderr", "n_replicates")

THREADS_ENV = "SCL_THREADS"


def resolve_threads(explicit: int | None = None) -> int:
    """Thread count: explicit argument, else the SCL_THREADS variable, else 1."""
    if explicit is None:
        raw = os.environ.get(THREADS_ENV)
        if raw is None:
            return 1
        try:
            explicit = int(raw)
        except ValueError:
            raise ConfigurationError(f"{THREADS_ENV}: expected an integer, got {raw!r}")
    if explicit < 1:
        raise ConfigurationError(f"thread count must be at least 1, got {explicit}")
    return explicit


def chunk_sizes(replicates: int) -> list[int]:
    full, rest = divmod(replicates, CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def draw_chunk(cfg: SimConfig, chunk_index: int, size: int, arms: int):
    """All randomness for one chunk, in a frozen draw order.

    Returns (x_off, y_off, x_on, y_on, u); u is None for deterministic
    intervals or when no strategy consumes tie randomization.
    """
    key = (cfg.seed << 64) | chunk_index
    rng = np.random.Generator(np.random.Philox(key=key))
    d = cfg.data
    x_off = rng.uniform(d.x_low, d.x_high, (size, cfg.n_offline))
    x_on = rng.uniform(d.x_low, d.x_high, (size, cfg.n_online))
    sd_off = np.sqrt(d.noise_variance_slope * x_off)
    sd_on = np.sqrt(d.noise_variance_slope * x_on)
    y_off = d.beta * x_off + rng.standard_normal((size, cfg.n_offline)) * sd_off
    y_on = d.beta * x_on + rng.standard_normal((size, cfg.n_online)) * sd_on
    u = None
    if cfg.randomized and arms:
        u = rng.random((size, cfg.n_online, arms))
    return x_off, y_off, x_on, y_on, u


@dataclass
class SimOutput:
    config: SimConfig
    decisions: np.ndarray  # (R, n_on) int8
    tracks: dict[str, BatchTracks]


def _mu(cfg: SimConfig):
    if cfg.data.beta == 1.0:
        return None
    beta = cfg.data.beta
    return lambda x: beta * x


def run_simulation(cfg: SimConfig, threads: int | None = None) -> SimOutput:
    """Run every replicate chunk and aggregate the per-time outcomes."""
    n_threads = resolve_threads(threads)
    R, n_on = cfg.replicates, cfg.n_online
    arms = sum(2 if s.kind is StrategyKind.EXPRESS_M else 1 for s in cfg.strategies)
    labels = [s.label for s in cfg.strategies]
    if "lord_ci" in cfg.baselines:
        labels.append(LORD_LABEL)
    if "aci" in cfg.baselines:
        labels.append(ACI_LABEL)

    decisions = np.zeros((R, n_on), dtype=np.int8)
    tracks = {label: BatchTracks.blank(R, n_on) for label in labels}
    sizes = chunk_sizes(R)
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    def work(i: int):
        lo, hi = int(offsets[i]), int(offsets[i + 1])
        x_off, y_off, x_on, y_on, u = draw_chunk(cfg, i, sizes[i], arms)
        mu = _mu(cfg)
        if cfg.strategies:
            dec, part = run_batch(
                cfg.schedule,
                cfg.strategies,
                cfg.alpha,
                x_off,
                y_off,
                x_on,
                y_on,
                u=u,
                mu=mu,
                report=cfg.report,
            )
            decisions[lo:hi] = dec
            for label, rec in part.items():
                _copy_tracks(tracks[label], rec, lo, hi)
        if "lord_ci" in cfg.baselines:
            dec, rec, _ = run_lord_ci(
                cfg.schedule, cfg.alpha, x_off, y_off, x_on, y_on, mu=mu
            )
            decisions[lo:hi] = dec
            _copy_tracks(tracks[LORD_LABEL], rec, lo, hi)
        if "aci" in cfg.baselines:
            dec, rec = run_aci(
                cfg.schedule,
                cfg.alpha,
                x_off,
                y_off,
                x_on,
                y_on,
                gamma=cfg.aci_gamma,
                mu=mu,
            )
            decisions[lo:hi] = dec
            _copy_tracks(tracks[ACI_LABEL], rec, lo, hi)

    if n_threads == 1 or len(sizes) == 1:
        for i in range(len(sizes)):
            work(i)
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            list(pool.map(work, range(len(sizes))))

    return SimOutput(config=cfg, decisions=decisions, tracks=tracks)


def _copy_tracks(dst: BatchTracks, src: BatchTracks, lo: int, hi: int):
    dst.reported[lo:hi] = src.reported
    dst.covered[lo:hi] = src.covered
    dst.size[lo:hi] = src.size
    dst.length[lo:hi] = src.length
    dst.infinite[lo:hi] = src.infinite
    dst.empty[lo:hi] = src.empty


def summary_rows(output: SimOutput) -> dict[str, list[MetricRow]]:
    """Metric rows per label, ordered by (metric, t) within each label.

    Baseline tracks carry every selected time regardless of the report
    mode, so they are always summarized in full.
    """
    strategy_labels = {s.label for s in output.config.strategies}
    rows = {}
    for label, tracks in output.tracks.items():
        mode = output.config.report if label in strategy_labels else "all"
        rs = summarize(label, tracks, report=mode)
        rows[label] = sorted(rs, key=lambda r: (r.metric, r.t))
    return rows


def write_outputs(
    output: SimOutput, out_dir: str | Path, prefix: str = ""
) -> list[Path]:
    """One CSV per strategy/baseline label; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for label, rows in summary_rows(output).items():
        path = out / f"{prefix}{label}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in rows:
                writer.writerow(
                    [r.t, r.strategy, r.metric, str(r.value), str(r.stderr), r.n_replicates]
                )
        paths.append(path)
    return paths
