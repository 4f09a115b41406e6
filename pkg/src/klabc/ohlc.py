"""Daily OHLC ingestion: per-asset CSVs with columns date,open,high,low,close
become one dataset row per common trading day,

    (H, L, S) = (ln(high/open), ln(low/open), ln(close/open))

per asset, so every row satisfies H >= 0 >= L and H >= S >= L.  Rows that
violate the price ordering are rejected rather than clamped.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .data import Dataset
from .errors import DataError

_REQUIRED = ("date", "open", "high", "low", "close")


def _load_asset(path) -> pd.DataFrame:
    path = Path(path)
    try:
        frame = pd.read_csv(path)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    frame.columns = [str(c).strip().lower() for c in frame.columns]
    missing = [c for c in _REQUIRED if c not in frame.columns]
    if missing:
        raise DataError(f"{path}: missing column(s) {missing}")
    frame = frame[list(_REQUIRED)]
    if frame["date"].duplicated().any():
        dup = frame["date"][frame["date"].duplicated()].iloc[0]
        raise DataError(f"{path}: duplicate date {dup!r}")

    prices = frame[["open", "high", "low", "close"]].to_numpy(dtype=float)
    for i, (o, h, l, c) in enumerate(prices):
        row = i + 2  # header is line 1
        if not np.all(np.isfinite([o, h, l, c])) or min(o, h, l, c) <= 0:
            raise DataError(f"{path}: nonpositive or missing price at "
                            f"row {row}")
        if h < o:
            raise DataError(f"{path}: high below open at row {row}")
        if h < c:
            raise DataError(f"{path}: high below close at row {row}")
        if l > o:
            raise DataError(f"{path}: low above open at row {row}")
        if l > c:
            raise DataError(f"{path}: low above close at row {row}")
    return frame.set_index("date")


def ingest_ohlc(paths: Sequence, out_path=None) -> Dataset:
    """Build the (days x 3d) dataset from one CSV per asset.

    Days are the intersection of the assets' dates, ascending; an empty
    intersection is reported with the first mismatching date.
    """
    if not paths:
        raise DataError("need at least one OHLC csv")
    frames = [_load_asset(p) for p in paths]
    common = frames[0].index
    for frame in frames[1:]:
        common = common.intersection(frame.index)
    if len(common) == 0:
        first = frames[0].index[0]
        raise DataError(
            f"no common dates across assets; first mismatch: {first!r} "
            f"from {Path(paths[0]).name} is absent elsewhere")
    common = sorted(common)

    blocks = []
    for frame in frames:
        sub = frame.loc[common]
        opens = sub["open"].to_numpy(dtype=float)
        blocks.append(np.column_stack([
            np.log(sub["high"].to_numpy(dtype=float) / opens),
            np.log(sub["low"].to_numpy(dtype=float) / opens),
            np.log(sub["close"].to_numpy(dtype=float) / opens)]))
    ds = Dataset(np.concatenate(blocks, axis=1))
    if out_path is not None:
        ds.save(out_path)
    return ds
