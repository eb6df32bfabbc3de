"""Numeric strategies: discrete, binned (percentile intervals) and digit-wise."""

from typing import List, Optional

import numpy as np

from ..errors import SchemaMismatch
from ..models.schema import (
    MISSING_TOKEN,
    AnalysisOptions,
    ColumnKind,
    DigitLayout,
    EncodingSpec,
    EncodingStrategy,
    SubColumn,
)
from .values import decimals_of, format_float, nearest_rank_bounds

_NUMERIC_STRATEGIES = (
    EncodingStrategy.NUMERIC_DISCRETE,
    EncodingStrategy.NUMERIC_BINNED,
    EncodingStrategy.NUMERIC_DIGIT,
)
_PRESENT = "_PRESENT_"
_DIGITS = [str(d) for d in range(10)]


def select_numeric_strategy(
    distinct_count: int,
    user_override: Optional[EncodingStrategy] = None,
    discrete_max: int = 100,
) -> EncodingStrategy:
    """Discrete up to `discrete_max` distinct values, binned above; digit only on request."""
    if distinct_count < 1:
        raise ValueError("distinct_count must be >= 1")
    if user_override is not None:
        return user_override
    if distinct_count <= discrete_max:
        return EncodingStrategy.NUMERIC_DISCRETE
    return EncodingStrategy.NUMERIC_BINNED


# =============================================================================
# Analysis
# =============================================================================

def analyze_numeric(
    name: str,
    values: np.ndarray,
    opts: AnalysisOptions,
    override: Optional[EncodingStrategy] = None,
    kind: ColumnKind = ColumnKind.NUMERIC,
) -> EncodingSpec:
    """Spec for a numeric column given its parsed values (NaN = missing)."""
    present = values[~np.isnan(values)]
    has_missing = bool(np.isnan(values).any())
    base = dict(column_name=name, kind=kind, source_columns=[name], has_missing=has_missing)

    if present.size == 0:
        labels = [MISSING_TOKEN]
        base["has_missing"] = True
        return EncodingSpec(
            **base,
            strategy=EncodingStrategy.NUMERIC_DISCRETE,
            categories=labels,
            sub_columns=[SubColumn(name=f"{name}__val", cardinality=1, labels=labels)],
        )

    is_integer = bool(np.all(np.mod(present, 1) == 0))
    clip_low, clip_high = nearest_rank_bounds(present, opts.clip_quantiles)
    clipped = np.clip(present, clip_low, clip_high)
    distinct = np.unique(clipped)
    strategy = select_numeric_strategy(len(distinct), override, opts.discrete_max)
    base.update(clip_low=clip_low, clip_high=clip_high, is_integer=is_integer)

    if strategy == EncodingStrategy.NUMERIC_DISCRETE:
        uniq, counts = np.unique(clipped, return_counts=True)
        frequent = uniq[counts >= opts.rare_min_count]
        if frequent.size > 0:
            return _discrete_spec(name, frequent, has_missing, base)
        strategy = EncodingStrategy.NUMERIC_BINNED

    if strategy == EncodingStrategy.NUMERIC_BINNED:
        return _binned_spec(name, clipped, has_missing, opts.max_bins, base)

    return _digit_spec(name, clipped, has_missing, opts.max_fraction_digits, base)


def analyze_counts(name: str, values: np.ndarray, opts: AnalysisOptions, include_zero: bool) -> EncodingSpec:
    """Spec of a sequence length or index column: every observed count is kept."""
    uniq = np.unique(np.asarray(values, dtype=float))
    if include_zero:
        uniq = np.union1d(uniq, [0.0])
    base = dict(
        column_name=name,
        kind=ColumnKind.NUMERIC,
        source_columns=[name],
        clip_low=float(uniq.min()),
        clip_high=float(uniq.max()),
        is_integer=True,
    )
    if len(uniq) <= opts.discrete_max:
        return _discrete_spec(name, uniq, False, base)
    return _digit_spec(name, uniq, False, 0, base)


def _discrete_spec(name: str, frequent: np.ndarray, has_missing: bool, base: dict) -> EncodingSpec:
    labels = ([MISSING_TOKEN] if has_missing else []) + [format_float(float(v)) for v in frequent]
    return EncodingSpec(
        **base,
        strategy=EncodingStrategy.NUMERIC_DISCRETE,
        categories=labels,
        sub_columns=[SubColumn(name=f"{name}__val", cardinality=len(labels), labels=labels)],
    )


def _binned_spec(name: str, clipped: np.ndarray, has_missing: bool, max_bins: int, base: dict) -> EncodingSpec:
    edges = np.unique(np.quantile(clipped, np.linspace(0.0, 1.0, max_bins + 1), method="lower"))
    if edges.size < 2:
        edges = np.array([edges[0], edges[0] + 1.0])
    n_bins = edges.size - 1
    labels = [MISSING_TOKEN] if has_missing else []
    for b in range(n_bins):
        close = "]" if b == n_bins - 1 else ")"
        labels.append(f"[{format_float(edges[b])}, {format_float(edges[b + 1])}{close}")
    return EncodingSpec(
        **base,
        strategy=EncodingStrategy.NUMERIC_BINNED,
        bin_edges=[float(e) for e in edges],
        sub_columns=[SubColumn(name=f"{name}__bin", cardinality=len(labels), labels=labels)],
    )


def _digit_spec(name: str, clipped: np.ndarray, has_missing: bool, max_fraction: int, base: dict) -> EncodingSpec:
    has_sign = bool((clipped < 0).any())
    fraction = min(max((decimals_of(format_float(float(v))) for v in np.unique(clipped)), default=0), max_fraction)
    integer = max(1, len(str(int(np.floor(np.max(np.abs(clipped)))))))
    layout = DigitLayout(has_sign=has_sign, integer_digits=integer, fraction_digits=fraction)

    subs: List[SubColumn] = []
    if has_missing:
        subs.append(SubColumn(name=f"{name}__missing", cardinality=2, labels=[_PRESENT, MISSING_TOKEN]))
    if has_sign:
        subs.append(SubColumn(name=f"{name}__sign", cardinality=2, labels=["+", "-"]))
    for p in range(integer - 1, -1, -1):
        subs.append(SubColumn(name=f"{name}__E{p}", cardinality=10, labels=_DIGITS))
    for p in range(1, fraction + 1):
        subs.append(SubColumn(name=f"{name}__E-{p}", cardinality=10, labels=_DIGITS))
    return EncodingSpec(
        **base,
        strategy=EncodingStrategy.NUMERIC_DIGIT,
        digit_layout=layout,
        sub_columns=subs,
    )


# =============================================================================
# Encode / decode
# =============================================================================

def _discrete_values(spec: EncodingSpec) -> np.ndarray:
    return np.array([float(label) for label in spec.sub_columns[0].labels if label != MISSING_TOKEN])


def encode_numeric(spec: EncodingSpec, values: np.ndarray) -> np.ndarray:
    """Indices [n x width] for parsed values (NaN = missing)."""
    values = np.asarray(values, dtype=float)
    missing = np.isnan(values)
    if missing.any() and not spec.has_missing:
        raise SchemaMismatch(f"column {spec.column_name} has missing values but no MISSING category")
    low = spec.clip_low if spec.clip_low is not None else -np.inf
    high = spec.clip_high if spec.clip_high is not None else np.inf
    filled = np.where(missing, low if np.isfinite(low) else 0.0, values)
    clipped = np.clip(filled, low, high)
    offset = 1 if spec.has_missing else 0

    if spec.strategy == EncodingStrategy.NUMERIC_DISCRETE:
        levels = _discrete_values(spec)
        out = np.zeros(len(values), dtype=np.int64)
        if levels.size > 0:
            out = _nearest_level(levels, clipped) + offset
        if spec.has_missing:
            out[missing] = 0
        return out[:, None]

    if spec.strategy == EncodingStrategy.NUMERIC_BINNED:
        edges = np.asarray(spec.bin_edges)
        bins = np.clip(np.searchsorted(edges, clipped, side="right") - 1, 0, edges.size - 2) + offset
        if spec.has_missing:
            bins[missing] = 0
        return bins.astype(np.int64)[:, None]

    return _encode_digits(spec, clipped, missing)


def _nearest_level(levels: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Index of the closest level; ties go to the lower level."""
    pos = np.searchsorted(levels, v, side="left")
    hi = np.clip(pos, 0, levels.size - 1)
    lo = np.clip(pos - 1, 0, levels.size - 1)
    pick_hi = np.abs(levels[hi] - v) < np.abs(v - levels[lo])
    return np.where(pick_hi, hi, lo).astype(np.int64)


def _encode_digits(spec: EncodingSpec, clipped: np.ndarray, missing: np.ndarray) -> np.ndarray:
    layout = spec.digit_layout
    scale = 10 ** layout.fraction_digits
    limit = 10 ** (layout.integer_digits + layout.fraction_digits) - 1
    scaled = np.minimum(np.rint(np.abs(clipped) * scale).astype(np.int64), limit)
    scaled[missing] = 0

    cols = []
    if spec.has_missing:
        cols.append(missing.astype(np.int64))
    if layout.has_sign:
        cols.append(((clipped < 0) & ~missing & (scaled > 0)).astype(np.int64))
    n_digits = layout.integer_digits + layout.fraction_digits
    for k in range(n_digits - 1, -1, -1):
        cols.append((scaled // 10 ** k) % 10)
    return np.stack(cols, axis=1).astype(np.int64)


def decode_numeric(spec: EncodingSpec, idx: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Float values (NaN = missing); binned values are drawn inside their bin from `uniforms`."""
    n = idx.shape[0]
    if spec.strategy == EncodingStrategy.NUMERIC_DISCRETE:
        labels = spec.sub_columns[0].labels
        table = np.array([np.nan if label == MISSING_TOKEN else float(label) for label in labels])
        return table[idx[:, 0]]

    if spec.strategy == EncodingStrategy.NUMERIC_BINNED:
        offset = 1 if spec.has_missing else 0
        edges = np.asarray(spec.bin_edges)
        b = idx[:, 0] - offset
        missing = b < 0
        b = np.clip(b, 0, edges.size - 2)
        lo, hi = edges[b], edges[b + 1]
        last = b == edges.size - 2
        if spec.is_integer:
            lo_i = np.ceil(lo)
            hi_i = np.where(last, np.floor(hi), np.ceil(hi) - 1)
            hi_i = np.maximum(hi_i, lo_i)
            values = lo_i + np.floor(uniforms * (hi_i - lo_i + 1))
            values = np.minimum(values, hi_i)
        else:
            values = lo + uniforms * (hi - lo)
            values = np.where(last, np.minimum(values, hi), np.minimum(values, np.nextafter(hi, lo)))
        values = values.astype(float)
        values[missing] = np.nan
        return values

    layout = spec.digit_layout
    col = 0
    missing = np.zeros(n, dtype=bool)
    negative = np.zeros(n, dtype=bool)
    if spec.has_missing:
        missing = idx[:, col] == 1
        col += 1
    if layout.has_sign:
        negative = idx[:, col] == 1
        col += 1
    scaled = np.zeros(n, dtype=np.int64)
    for k in range(layout.integer_digits + layout.fraction_digits):
        scaled = scaled * 10 + idx[:, col + k]
    values = scaled / float(10 ** layout.fraction_digits)
    values = np.where(negative, -values, values)
    if spec.clip_low is not None and spec.clip_high is not None:
        values = np.clip(values, spec.clip_low, spec.clip_high)
    values[missing] = np.nan
    return values


def is_numeric_strategy(strategy: EncodingStrategy) -> bool:
    return strategy in _NUMERIC_STRATEGIES
