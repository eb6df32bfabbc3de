"""Datetime strategies: calendar split and offsets relative to a sequence start."""

from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from ..errors import SchemaMismatch
from ..models.schema import (
    MISSING_TOKEN,
    AnalysisOptions,
    ColumnKind,
    EncodingSpec,
    EncodingStrategy,
    SubColumn,
)
from .numeric import analyze_numeric, decode_numeric, encode_numeric
from .values import format_datetimes, nearest_rank_bounds

_TIME_PARTS = [("hour", 24, 0), ("minute", 60, 0), ("second", 60, 0)]


def _components(seconds: np.ndarray) -> Dict[str, np.ndarray]:
    """Calendar fields of POSIX seconds (naive, proleptic Gregorian)."""
    total_ms = np.round(seconds * 1000).astype(np.int64)
    stamp = total_ms.astype("datetime64[ms]")
    days = stamp.astype("datetime64[D]")
    months = stamp.astype("datetime64[M]")
    ms_of_day = total_ms - days.astype("datetime64[ms]").astype(np.int64)
    return {
        "year": stamp.astype("datetime64[Y]").astype(np.int64) + 1970,
        "month": months.astype(np.int64) % 12 + 1,
        "day": (days - months.astype("datetime64[D]")).astype(np.int64) + 1,
        "hour": ms_of_day // 3_600_000,
        "minute": (ms_of_day // 60_000) % 60,
        "second": (ms_of_day // 1000) % 60,
        "ms": ms_of_day % 1000,
    }


def _assemble(parts: Dict[str, np.ndarray]) -> np.ndarray:
    """POSIX seconds from calendar fields; days past the month end are clamped."""
    months = ((parts["year"] - 1970) * 12 + parts["month"] - 1).astype("datetime64[M]")
    first = months.astype("datetime64[D]")
    days_in_month = ((months + 1).astype("datetime64[D]") - first).astype(np.int64)
    day = np.clip(parts["day"], 1, days_in_month)
    date = first + (day - 1)
    seconds = date.astype("datetime64[s]").astype(np.int64).astype(float)
    seconds += parts["hour"] * 3600 + parts["minute"] * 60 + parts["second"] + parts["ms"] / 1000.0
    return seconds


def analyze_datetime(name: str, seconds: np.ndarray, opts: AnalysisOptions) -> EncodingSpec:
    present = seconds[~np.isnan(seconds)]
    has_missing = bool(np.isnan(seconds).any())
    if present.size == 0:
        labels = [MISSING_TOKEN]
        return EncodingSpec(
            column_name=name,
            kind=ColumnKind.DATETIME,
            strategy=EncodingStrategy.DATETIME_SPLIT,
            source_columns=[name],
            has_missing=True,
            has_time=False,
            sub_columns=[SubColumn(name=f"{name}__year", cardinality=1, labels=labels)],
        )

    clip_low, clip_high = nearest_rank_bounds(present, opts.clip_quantiles)
    clipped = np.clip(present, clip_low, clip_high)
    parts = _components(clipped)
    has_millis = bool((parts["ms"] != 0).any())
    has_time = has_millis or bool(((parts["hour"] + parts["minute"] + parts["second"]) != 0).any())

    years = range(int(parts["year"].min()), int(parts["year"].max()) + 1)
    year_labels = ([MISSING_TOKEN] if has_missing else []) + [str(y) for y in years]
    subs = [
        SubColumn(name=f"{name}__year", cardinality=len(year_labels), labels=year_labels),
        SubColumn(name=f"{name}__month", cardinality=12, labels=[str(m) for m in range(1, 13)]),
        SubColumn(name=f"{name}__day", cardinality=31, labels=[str(d) for d in range(1, 32)]),
    ]
    if has_time:
        for part, card, start in _TIME_PARTS:
            subs.append(SubColumn(name=f"{name}__{part}", cardinality=card, labels=[str(v) for v in range(start, card)]))
    if has_millis:
        subs.append(SubColumn(name=f"{name}__ms", cardinality=1000, labels=[str(v) for v in range(1000)]))

    return EncodingSpec(
        column_name=name,
        kind=ColumnKind.DATETIME,
        strategy=EncodingStrategy.DATETIME_SPLIT,
        source_columns=[name],
        clip_low=clip_low,
        clip_high=clip_high,
        has_missing=has_missing,
        has_time=has_time,
        has_millis=has_millis,
        sub_columns=subs,
    )


def _first_year(spec: EncodingSpec) -> int:
    labels = spec.sub_columns[0].labels
    years = [int(label) for label in labels if label != MISSING_TOKEN]
    return years[0] if years else 1970


def encode_datetime(spec: EncodingSpec, seconds: np.ndarray) -> np.ndarray:
    missing = np.isnan(seconds)
    if missing.any() and not spec.has_missing:
        raise SchemaMismatch(f"column {spec.column_name} has missing values but no MISSING category")
    offset = 1 if spec.has_missing else 0
    n_years = spec.sub_columns[0].cardinality - offset
    if n_years == 0:
        return np.zeros((len(seconds), spec.width), dtype=np.int64)

    clipped = np.clip(np.where(missing, spec.clip_low, seconds), spec.clip_low, spec.clip_high)
    parts = _components(clipped)
    cols = [np.clip(parts["year"] - _first_year(spec), 0, n_years - 1) + offset, parts["month"] - 1, parts["day"] - 1]
    if spec.has_time:
        cols.extend([parts["hour"], parts["minute"], parts["second"]])
    if spec.has_millis:
        cols.append(parts["ms"])
    out = np.stack(cols, axis=1).astype(np.int64)
    if spec.has_missing:
        out[missing] = 0
    return out


def decode_datetime_seconds(spec: EncodingSpec, idx: np.ndarray) -> np.ndarray:
    offset = 1 if spec.has_missing else 0
    n = idx.shape[0]
    if spec.sub_columns[0].cardinality - offset == 0:
        return np.full(n, np.nan)

    missing = idx[:, 0] < offset
    zeros = np.zeros(n, dtype=np.int64)
    parts = {
        "year": _first_year(spec) + np.maximum(idx[:, 0] - offset, 0),
        "month": idx[:, 1] + 1,
        "day": idx[:, 2] + 1,
        "hour": idx[:, 3] if spec.has_time else zeros,
        "minute": idx[:, 4] if spec.has_time else zeros,
        "second": idx[:, 5] if spec.has_time else zeros,
        "ms": idx[:, 6] if spec.has_millis else zeros,
    }
    seconds = np.clip(_assemble(parts), spec.clip_low, spec.clip_high)
    seconds[missing] = np.nan
    return seconds


def decode_datetime(spec: EncodingSpec, idx: np.ndarray) -> List[str]:
    return format_datetimes(decode_datetime_seconds(spec, idx), spec.has_time, spec.has_millis)


# =============================================================================
# Relative datetimes (sequential tables)
# =============================================================================

def group_starts(seconds: np.ndarray, groups: np.ndarray) -> np.ndarray:
    """First non-missing entry of each row's group, broadcast to the row."""
    return pd.Series(seconds).groupby(groups).transform("first").to_numpy()


def group_offsets(seconds: np.ndarray, groups: np.ndarray) -> np.ndarray:
    """Seconds since the first non-missing entry of each row's group."""
    return seconds - group_starts(seconds, groups)


def analyze_datetime_relative(
    name: str, seconds: np.ndarray, groups: np.ndarray, opts: AnalysisOptions
) -> EncodingSpec:
    absolute = analyze_datetime(name, seconds, opts)
    offsets = group_offsets(seconds, groups)
    values = analyze_numeric(name, offsets, opts, kind=ColumnKind.DATETIME_RELATIVE)

    starts = pd.Series(seconds).groupby(groups).first().to_numpy()
    start_spec = analyze_datetime(f"{name}__start", starts, opts)
    present = starts[~np.isnan(starts)]
    anchor = float(present.min()) if present.size else 0.0
    if absolute.clip_low is not None:
        anchor = max(anchor, absolute.clip_low)

    return values.model_copy(
        update={
            "strategy": EncodingStrategy.DATETIME_RELATIVE,
            "value_strategy": values.strategy,
            "relative_anchor": anchor,
            "relative_start": start_spec,
            "has_time": absolute.has_time,
            "has_millis": absolute.has_millis,
            "sub_columns": values.sub_columns + start_spec.sub_columns,
        }
    )


def _offset_width(spec: EncodingSpec) -> int:
    return spec.width - (spec.relative_start.width if spec.relative_start is not None else 0)


def _offset_spec(spec: EncodingSpec) -> EncodingSpec:
    return spec.model_copy(
        update={
            "strategy": spec.value_strategy,
            "sub_columns": spec.sub_columns[: _offset_width(spec)],
            "relative_start": None,
        }
    )


def encode_datetime_relative(spec: EncodingSpec, seconds: np.ndarray, groups: np.ndarray) -> np.ndarray:
    """Offset sub-columns, then the group's start repeated on every row (t=0 has offset 0)."""
    offsets = encode_numeric(_offset_spec(spec), group_offsets(seconds, groups))
    if spec.relative_start is None:
        return offsets
    starts = encode_datetime(spec.relative_start, group_starts(seconds, groups))
    return np.concatenate([offsets, starts], axis=1)


def decode_datetime_relative(
    spec: EncodingSpec,
    idx: np.ndarray,
    uniforms: np.ndarray,
    groups: Optional[np.ndarray] = None,
) -> List[str]:
    """
    Offsets added to the sequence start.

    With `groups`, every row of a sequence uses the start decoded on the
    sequence's first row; without, each row uses its own start sub-columns.
    """
    width = _offset_width(spec)
    offsets = decode_numeric(_offset_spec(spec), idx[:, :width], uniforms)
    anchor = spec.relative_anchor if spec.relative_anchor is not None else 0.0
    if spec.relative_start is None:
        starts = np.full(len(idx), anchor)
    else:
        starts = decode_datetime_seconds(spec.relative_start, idx[:, width:])
        if groups is not None and len(idx):
            starts = pd.Series(starts).groupby(groups).transform("first").to_numpy()
        starts = np.where(np.isnan(starts), anchor, starts)
    return format_datetimes(offsets + starts, spec.has_time, spec.has_millis)
