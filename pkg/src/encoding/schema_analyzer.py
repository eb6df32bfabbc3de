"""
Schema analysis.

Infers the kind of every raw column and derives its privacy-safe
EncodingSpec: rare categories fold into RARE, numeric ranges are clipped
to empirical quantiles, and each column is laid out as sub-columns.
"""

from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import structlog

from ..errors import EmptyTable, GeospatialPairError, MixedTypeColumn, UnknownGroupKey
from ..models.schema import (
    SEQ_INDEX_COLUMN,
    SEQ_LEN_COLUMN,
    AnalysisOptions,
    ColumnKind,
    EncodingSpec,
    EncodingStrategy,
    GeoPair,
    TableRole,
    TableSchema,
)
from .categorical import analyze_categorical
from .character import analyze_character
from .datetimes import analyze_datetime, analyze_datetime_relative
from .numeric import analyze_counts, analyze_numeric
from .quadtile import analyze_quadtile
from .values import as_text, missing_mask, parse_datetime, parse_numeric

logger = structlog.get_logger(__name__)


def parse_kinds(raw: Dict[str, Any]) -> Tuple[Dict[str, ColumnKind], Dict[str, GeoPair], Dict[str, EncodingStrategy]]:
    """
    Split a kinds.json document into declared kinds, geospatial pairs and numeric overrides.

    Accepted entries:
        "col": "numeric"
        "col": {"kind": "numeric", "strategy": "numeric_digit"}
        "loc": {"kind": "geospatial", "lat": "latitude", "lon": "longitude"}
    """
    kinds: Dict[str, ColumnKind] = {}
    geo: Dict[str, GeoPair] = {}
    overrides: Dict[str, EncodingStrategy] = {}
    for column, entry in raw.items():
        if isinstance(entry, str):
            entry = {"kind": entry}
        try:
            kind = ColumnKind(entry["kind"])
        except (KeyError, ValueError) as e:
            raise MixedTypeColumn(f"invalid kind declaration for {column}: {entry}") from e
        if kind == ColumnKind.GEOSPATIAL:
            if "lat" not in entry or "lon" not in entry:
                raise GeospatialPairError(f"geospatial column {column} must declare lat and lon")
            geo[column] = GeoPair(lat=entry["lat"], lon=entry["lon"])
            continue
        kinds[column] = kind
        if "strategy" in entry:
            overrides[column] = EncodingStrategy(entry["strategy"])
    return kinds, geo, overrides


def infer_kind(text: pd.Series, opts: AnalysisOptions) -> ColumnKind:
    """Datetime if every present cell parses under a known format, else numeric, else categorical."""
    if missing_mask(text).all():
        return ColumnKind.CATEGORICAL
    _, failed = parse_datetime(text, opts.datetime_formats)
    if not failed.any():
        return ColumnKind.DATETIME
    _, failed = parse_numeric(text)
    if not failed.any():
        return ColumnKind.NUMERIC
    return ColumnKind.CATEGORICAL


def _check_columns(df: pd.DataFrame, table_role: TableRole, group_key: Optional[str], context_link: Optional[str]) -> None:
    if df.shape[0] == 0 or df.shape[1] == 0:
        raise EmptyTable("table has no rows or no columns", shape=df.shape)
    if table_role == TableRole.SEQUENTIAL and not group_key:
        raise UnknownGroupKey("sequential tables require a group key")
    for key in (group_key, context_link):
        if key is not None and key not in df.columns:
            raise UnknownGroupKey(f"column {key!r} not found in table", columns=list(df.columns))


def _geo_members(geo: Dict[str, GeoPair], df: pd.DataFrame) -> Dict[str, Tuple[str, GeoPair]]:
    """Map each lat/lon column to its geospatial spec name."""
    members: Dict[str, Tuple[str, GeoPair]] = {}
    for name, pair in geo.items():
        for col in (pair.lat, pair.lon):
            if col not in df.columns:
                raise GeospatialPairError(f"geospatial column {name}: {col!r} not found in table")
            if col in members:
                raise GeospatialPairError(f"column {col!r} is used by more than one geospatial pair")
            members[col] = (name, pair)
        if pair.lat == pair.lon:
            raise GeospatialPairError(f"geospatial column {name}: lat and lon must differ")
    return members


def group_ids(keys: pd.Series) -> np.ndarray:
    """Group index per row, numbered in order of first appearance."""
    codes, _ = pd.factorize(keys, sort=False)
    return codes.astype(np.int64)


def analyze(
    raw_table: pd.DataFrame,
    declared_kinds: Optional[Dict[str, ColumnKind]] = None,
    opts: Optional[AnalysisOptions] = None,
    table_role: TableRole = TableRole.FLAT,
    group_key: Optional[str] = None,
    context_link: Optional[str] = None,
) -> TableSchema:
    """
    Derive a TableSchema from a raw table.

    Args:
        raw_table: Table of text cells ('' = missing)
        declared_kinds: Optional kind per column; others are inferred
        opts: Analysis options (geospatial pairs and numeric overrides included)
        table_role: flat or sequential
        group_key: Column grouping the rows of a sequential table
        context_link: Column linking to (or keying) a context table

    Returns:
        TableSchema with one spec per non-key column
    """
    opts = opts or AnalysisOptions()
    declared_kinds = dict(declared_kinds or {})
    _check_columns(raw_table, table_role, group_key, context_link)
    geo_members = _geo_members(opts.geo_columns, raw_table)

    for column, kind in declared_kinds.items():
        if column not in raw_table.columns:
            raise MixedTypeColumn(f"declared column {column!r} not found in table")
        if kind == ColumnKind.GEOSPATIAL and column not in opts.geo_columns:
            raise GeospatialPairError(f"geospatial column {column} requires a lat/lon pair")

    groups = None
    if table_role == TableRole.SEQUENTIAL:
        groups = group_ids(as_text(raw_table[group_key]))

    excluded = {c for c in (group_key, context_link) if c is not None}
    specs: List[EncodingSpec] = []
    for column in raw_table.columns:
        if column in excluded:
            continue
        if column in geo_members:
            name, pair = geo_members[column]
            if column == pair.lat:
                lat, lat_failed = parse_numeric(as_text(raw_table[pair.lat]))
                lon, lon_failed = parse_numeric(as_text(raw_table[pair.lon]))
                if lat_failed.any() or lon_failed.any():
                    raise MixedTypeColumn(f"geospatial column {name}: non-numeric coordinates")
                specs.append(analyze_quadtile(name, pair.lat, pair.lon, lat, lon, opts))
            continue
        text = as_text(raw_table[column])
        kind = declared_kinds.get(column) or infer_kind(text, opts)
        specs.append(_analyze_column(column, text, kind, opts, groups))
        logger.debug("column_analyzed", column=column, kind=kind.value, strategy=specs[-1].strategy.value)

    schema = TableSchema(
        specs=specs,
        table_role=table_role,
        group_key=group_key,
        context_link=context_link,
        datetime_formats=list(opts.datetime_formats),
    )
    if groups is not None:
        lengths = np.bincount(groups)
        schema.seq_len_spec = analyze_counts(SEQ_LEN_COLUMN, lengths, opts, include_zero=True)
        schema.seq_index_spec = analyze_counts(
            SEQ_INDEX_COLUMN, np.arange(1, int(lengths.max()) + 1), opts, include_zero=False
        )

    logger.info(
        "schema_analyzed",
        columns=len(specs),
        sub_columns=len(schema.sub_columns()),
        table_role=table_role.value,
    )
    return schema


def _analyze_column(
    column: str,
    text: pd.Series,
    kind: ColumnKind,
    opts: AnalysisOptions,
    groups: Optional[np.ndarray],
) -> EncodingSpec:
    if kind == ColumnKind.CATEGORICAL:
        return analyze_categorical(column, text, opts)

    if kind == ColumnKind.CHARACTER:
        return analyze_character(column, text, opts)

    if kind == ColumnKind.NUMERIC:
        values, failed = parse_numeric(text)
        if failed.any():
            raise MixedTypeColumn(f"column {column}: {int(failed.sum())} cells are not numeric", column=column)
        return analyze_numeric(column, values, opts, override=opts.numeric_overrides.get(column))

    if kind in (ColumnKind.DATETIME, ColumnKind.DATETIME_RELATIVE):
        seconds, failed = parse_datetime(text, opts.datetime_formats)
        if failed.any():
            raise MixedTypeColumn(f"column {column}: {int(failed.sum())} cells are not datetimes", column=column)
        if kind == ColumnKind.DATETIME:
            return analyze_datetime(column, seconds, opts)
        if groups is None:
            raise MixedTypeColumn(f"column {column}: datetime_relative requires a sequential table")
        return analyze_datetime_relative(column, seconds, groups, opts)

    raise GeospatialPairError(f"column {column}: geospatial columns must be declared as a lat/lon pair")
