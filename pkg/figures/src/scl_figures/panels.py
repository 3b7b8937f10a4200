"""Panel construction: grouped terminal bars and per-time metric curves.

One panel kind per quantity family.  The bar panel summarizes each
strategy at its last reported time across four quantities; the curve
panels trace one quantity over the online horizon.  Strategies whose
names match the documented always-valid set get a check mark.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from scl_figures.schema import SchemaError, load_frames

__all__ = ["PANEL_KINDS", "PanelSpec", "render"]

RC = {
    "figure.dpi": 110,
    "savefig.dpi": 150,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "font.size": 9,
}
matplotlib.rcParams.update(RC)

PANEL_KINDS = (
    "miscoverage_bar",
    "fcr_curve",
    "calib_size_curve",
    "infinite_fraction_curve",
    "median_length_curve",
)

_CURVE_METRIC = {
    "fcr_curve": "fcr",
    "calib_size_curve": "calib_size",
    "infinite_fraction_curve": "infinite_fraction",
    "median_length_curve": "median_length",
}

_BAR_METRICS = ("miscoverage", "calib_size", "median_length", "infinite_fraction")

_TITLES = {
    "miscoverage": "miscoverage",
    "fcr": "FCR",
    "calib_size": "calibration points",
    "infinite_fraction": "fraction of infinite intervals",
    "median_length": "median interval length",
}

_BAR_COLORS = {
    "miscoverage": "tab:blue",
    "calib_size": "lightgrey",
    "median_length": "lightblue",
    "infinite_fraction": "bisque",
}

# quantities on a probability scale get the dashed target-level line
_RATE_METRICS = {"miscoverage", "fcr"}

# strategy names carrying a selection-conditional guarantee by construction
_VALID_NAME = re.compile(r"^(S-FIX|EXPRESS|EXPRESS-M|\d+-EXPRESS|LORD-CI|ACI)$")


@dataclass(frozen=True)
class PanelSpec:
    kind: str
    inputs: tuple[str, ...]
    alpha: float
    out_path: str

    def __post_init__(self):
        if self.kind not in PANEL_KINDS:
            raise ValueError(
                f"unknown panel kind {self.kind!r}; choose from {', '.join(PANEL_KINDS)}"
            )
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")


def _annotate(name: str) -> str:
    return f"{name} ✓" if _VALID_NAME.match(name) else name


def _metric_rows(frame: pd.DataFrame, metric: str) -> pd.DataFrame:
    rows = frame[frame["metric"] == metric]
    if rows.empty:
        raise SchemaError(f"no '{metric}' rows in inputs")
    return rows


def _bar_figure(frame: pd.DataFrame, alpha: float):
    strategies = list(pd.unique(frame["strategy"]))
    _metric_rows(frame, "miscoverage")
    fig, axes = plt.subplots(2, 2, figsize=(8.0, 5.5))
    x = np.arange(len(strategies))
    for ax, metric in zip(axes.ravel(), _BAR_METRICS):
        rows = frame[frame["metric"] == metric]
        heights = []
        for name in strategies:
            own = rows[rows["strategy"] == name]
            # snapshot at the last reported time for this strategy
            heights.append(
                float(own.loc[own["t"].idxmax(), "value"]) if not own.empty else np.nan
            )
        ax.bar(x, heights, color=_BAR_COLORS[metric], edgecolor="black", linewidth=0.6)
        ax.set_xticks(x)
        ax.set_xticklabels([_annotate(s) for s in strategies], rotation=30, ha="right")
        ax.set_title(_TITLES[metric])
        if metric in _RATE_METRICS:
            ax.axhline(alpha, color="red", linestyle="--", linewidth=1.0)
    fig.tight_layout()
    return fig


def _curve_figure(frame: pd.DataFrame, metric: str, alpha: float):
    rows = _metric_rows(frame, metric)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for name in pd.unique(rows["strategy"]):
        own = rows[rows["strategy"] == name].sort_values("t")
        values = own["value"].to_numpy(dtype=float)
        ax.plot(
            own["t"].to_numpy(),
            np.where(np.isfinite(values), values, np.nan),
            label=_annotate(name),
            linewidth=1.4,
        )
    if metric in _RATE_METRICS:
        ax.axhline(alpha, color="black", linestyle="--", linewidth=1.0)
    ax.set_xlabel("time")
    ax.set_ylabel(_TITLES[metric])
    ax.legend()
    fig.tight_layout()
    return fig


def render(spec: PanelSpec) -> Path:
    """Build the panel and write it to spec.out_path.

    All validation happens before any output is opened, so a failing
    spec leaves no file behind.
    """
    frame = load_frames(spec.inputs)
    if spec.kind == "miscoverage_bar":
        fig = _bar_figure(frame, spec.alpha)
    else:
        fig = _curve_figure(frame, _CURVE_METRIC[spec.kind], spec.alpha)
    out = Path(spec.out_path)
    try:
        # SVG output embeds a creation date unless told otherwise
        metadata = {"Date": None} if out.suffix == ".svg" else None
        fig.savefig(out, metadata=metadata)
    finally:
        plt.close(fig)
    return out
