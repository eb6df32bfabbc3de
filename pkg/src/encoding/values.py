"""Parsing and formatting of raw cell values.

Raw tables are pandas frames of text cells; the empty string is the only
missing marker.
"""

from decimal import Decimal, InvalidOperation
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd


def as_text(series: pd.Series) -> pd.Series:
    """Series of str with missing cells as ''."""
    series = pd.Series(series)
    if series.dtype == object and series.map(lambda v: isinstance(v, str)).all():
        return series.reset_index(drop=True)
    filled = series.astype(object).where(series.notna(), "")
    return filled.map(lambda v: v if isinstance(v, str) else _number_text(v)).reset_index(drop=True)


def _number_text(v: object) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    return str(v)


def missing_mask(text: pd.Series) -> np.ndarray:
    return (text == "").to_numpy()


def parse_numeric(text: pd.Series) -> Tuple[np.ndarray, np.ndarray]:
    """Floats (NaN where missing) and a mask of non-missing cells that failed to parse."""
    missing = missing_mask(text)
    values = pd.to_numeric(text.where(~missing, None), errors="coerce").to_numpy(dtype=float)
    failed = np.isnan(values) & ~missing
    return values, failed


def parse_datetime(text: pd.Series, formats: Sequence[str]) -> Tuple[np.ndarray, np.ndarray]:
    """POSIX seconds (NaN where missing) and a mask of unparseable cells.

    Formats are tried in order; the first one that parses a cell wins.
    """
    missing = missing_mask(text)
    parsed = pd.Series(pd.NaT, index=text.index, dtype="datetime64[ns]")
    for fmt in formats:
        todo = parsed.isna().to_numpy() & ~missing
        if not todo.any():
            break
        attempt = pd.to_datetime(text[todo], format=fmt, errors="coerce")
        parsed.loc[todo] = attempt
    ok = parsed.notna().to_numpy()
    seconds = np.full(len(text), np.nan)
    seconds[ok] = parsed[ok].astype("int64").to_numpy() / 1e9
    failed = ~ok & ~missing
    return seconds, failed


def decimals_of(text: str) -> int:
    """Significant decimal places of a numeric literal ('12.30' -> 1)."""
    try:
        exponent = Decimal(text.strip()).normalize().as_tuple().exponent
    except InvalidOperation:
        return 0
    return max(0, -int(exponent)) if isinstance(exponent, int) else 0


def format_float(v: float) -> str:
    """Shortest text that parses back to exactly `v`."""
    if float(v).is_integer() and abs(v) < 1e16:
        return str(int(v))
    return np.format_float_positional(v, trim="-")


def format_numbers(values: np.ndarray, is_integer: bool) -> List[str]:
    out: List[str] = []
    for v in values:
        if np.isnan(v):
            out.append("")
        elif is_integer:
            out.append(str(int(round(v))))
        else:
            out.append(format_float(float(v)))
    return out


def format_datetimes(seconds: np.ndarray, has_time: bool, has_millis: bool) -> List[str]:
    """Naive timestamps as 'YYYY-MM-DD[ HH:MM:SS[.mmm]]'; NaN becomes ''."""
    ok = ~np.isnan(seconds)
    out = [""] * len(seconds)
    if not ok.any():
        return out
    stamps = pd.to_datetime(np.round(seconds[ok] * 1000).astype("int64"), unit="ms")
    if not has_time:
        text = stamps.strftime("%Y-%m-%d")
    elif has_millis:
        text = stamps.strftime("%Y-%m-%d %H:%M:%S.%f").str[:-3]
    else:
        text = stamps.strftime("%Y-%m-%d %H:%M:%S")
    for i, t in zip(np.flatnonzero(ok), text):
        out[i] = t
    return out


def nearest_rank_bounds(values: np.ndarray, quantiles: Tuple[float, float]) -> Tuple[float, float]:
    """Clip bounds as order statistics: floor-rank for the low, ceil-rank for the high quantile."""
    low_q, high_q = quantiles
    low = float(np.quantile(values, low_q, method="lower"))
    high = float(np.quantile(values, high_q, method="higher"))
    return low, high
