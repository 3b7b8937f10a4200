"""Validation and loading of metric CSV frames.

Every failure names the offending file and column so a mismatched input
is diagnosable from the error alone.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import pandas as pd

__all__ = ["COLUMNS", "SchemaError", "load_frames"]

COLUMNS = ("t", "strategy", "metric", "value", "stderr", "n_replicates")

# columns that must parse as numbers; strategy and metric stay free-form text
_NUMERIC = ("t", "value", "stderr", "n_replicates")


class SchemaError(ValueError):
    """Input CSV does not match the metric-frame layout."""


def _load_one(path: str | Path) -> pd.DataFrame:
    path = Path(path)
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError:
        raise SchemaError(f"{path}: no such file") from None
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{path}: empty file, no header row") from None
    missing = [c for c in COLUMNS if c not in frame.columns]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
    if frame.empty:
        raise SchemaError(f"{path}: header only, no metric rows")
    for column in _NUMERIC:
        try:
            frame[column] = pd.to_numeric(frame[column])
        except (ValueError, TypeError):
            raise SchemaError(f"{path}: column '{column}' is not numeric") from None
    return frame[list(COLUMNS)]


def load_frames(paths: Iterable[str | Path] | Sequence[str | Path]) -> pd.DataFrame:
    """Read and concatenate metric CSVs, validating each against the layout."""
    paths = list(paths)
    if not paths:
        raise SchemaError("no input files given")
    return pd.concat([_load_one(p) for p in paths], ignore_index=True)
