"""
Codec: raw tables to category-index matrices and back.

Encoding is deterministic. Decoding is deterministic except for binned
numeric values, which are drawn uniformly inside their bin from per-row
random streams (stream id = row index).
"""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import structlog

from ..errors import ConditionIndexInvalid, NotSequential, SchemaMismatch, ShapeMismatch
from ..models.encoded import EncodedTable
from ..models.schema import EncodingSpec, EncodingStrategy, TableSchema
from .categorical import decode_categorical, encode_categorical
from .categorical import unseen_mask as unseen_categories
from .character import decode_character, encode_character
from .character import unseen_mask as unseen_characters
from .datetimes import (
    decode_datetime,
    decode_datetime_relative,
    encode_datetime,
    encode_datetime_relative,
)
from .numeric import decode_numeric, encode_numeric, is_numeric_strategy
from .quadtile import decode_quadtile, encode_quadtile
from .schema_analyzer import group_ids
from .values import as_text, format_numbers, parse_datetime, parse_numeric

logger = structlog.get_logger(__name__)


class DecodeRng:
    """Seeded uniform streams, one per row, so decoding is reproducible in any chunking."""

    def __init__(self, seed: int = 0, row_offset: int = 0):
        self.seed = int(seed)
        self.row_offset = int(row_offset)

    def uniforms(self, n_rows: int, n_streams: int) -> np.ndarray:
        if n_rows == 0 or n_streams == 0:
            return np.zeros((n_rows, n_streams))
        return np.stack(
            [np.random.default_rng([self.seed, self.row_offset + i]).random(n_streams) for i in range(n_rows)]
        )


def _is_stochastic(spec: EncodingSpec) -> bool:
    return spec.strategy == EncodingStrategy.NUMERIC_BINNED or (
        spec.strategy == EncodingStrategy.DATETIME_RELATIVE
        and spec.value_strategy == EncodingStrategy.NUMERIC_BINNED
    )


# =============================================================================
# Encode
# =============================================================================

def _encode_spec(
    spec: EncodingSpec,
    table: pd.DataFrame,
    groups: Optional[np.ndarray],
    datetime_formats: Sequence[str],
) -> np.ndarray:
    for column in spec.source_columns:
        if column not in table.columns:
            raise SchemaMismatch(f"column {column!r} is missing from the table", column=column)
    text = as_text(table[spec.source_columns[0]])

    if spec.strategy == EncodingStrategy.CATEGORICAL:
        return encode_categorical(spec, text)
    if spec.strategy == EncodingStrategy.CHARACTER_SPLIT:
        return encode_character(spec, text)
    if is_numeric_strategy(spec.strategy):
        values, failed = parse_numeric(text)
        if failed.any():
            raise SchemaMismatch(f"column {spec.column_name}: non-numeric cells", column=spec.column_name)
        return encode_numeric(spec, values)
    if spec.strategy in (EncodingStrategy.DATETIME_SPLIT, EncodingStrategy.DATETIME_RELATIVE):
        seconds, failed = parse_datetime(text, datetime_formats)
        if failed.any():
            raise SchemaMismatch(f"column {spec.column_name}: unparseable datetimes", column=spec.column_name)
        if spec.strategy == EncodingStrategy.DATETIME_SPLIT:
            return encode_datetime(spec, seconds)
        if groups is None:
            raise SchemaMismatch(f"column {spec.column_name}: relative datetimes need sequence groups")
        return encode_datetime_relative(spec, seconds, groups)
    if spec.strategy == EncodingStrategy.QUADTILE:
        lat, lat_failed = parse_numeric(text)
        lon, lon_failed = parse_numeric(as_text(table[spec.source_columns[1]]))
        if lat_failed.any() or lon_failed.any():
            raise SchemaMismatch(f"column {spec.column_name}: non-numeric coordinates")
        return encode_quadtile(spec, lat, lon)
    raise SchemaMismatch(f"unsupported strategy {spec.strategy}")


def encode(
    raw_table: pd.DataFrame,
    schema: TableSchema,
    context_keys: Optional[Sequence[str]] = None,
) -> EncodedTable:
    """
    Encode a raw table under `schema`.

    Args:
        raw_table: Table of text cells ('' = missing)
        schema: Schema produced by analyze()
        context_keys: For sequential tables with a context table, the context
            keys in context-row order; every key becomes a group (possibly empty)

    Returns:
        EncodedTable of the data sub-columns (sequence columns are added by
        augment_sequences)
    """
    groups = None
    group_keys = None
    order = np.arange(len(raw_table))
    if schema.is_sequential:
        if schema.group_key not in raw_table.columns:
            raise SchemaMismatch(f"group key {schema.group_key!r} is missing from the table")
        keys = as_text(raw_table[schema.group_key])
        if context_keys is not None:
            lookup = {str(k): i for i, k in enumerate(context_keys)}
            mapped = keys.map(lookup)
            if mapped.isna().any():
                orphan = keys[mapped.isna()].iloc[0]
                raise SchemaMismatch(f"sequence key {orphan!r} has no context row")
            groups = mapped.to_numpy().astype(np.int64)
            group_keys = [str(k) for k in context_keys]
        else:
            groups = group_ids(keys)
            group_keys = list(pd.unique(keys))
        order = np.argsort(groups, kind="stable")
        groups = groups[order]

    table = raw_table.iloc[order].reset_index(drop=True)
    blocks = [_encode_spec(spec, table, groups, schema.datetime_formats) for spec in schema.specs]
    subs = schema.sub_columns(with_sequence_columns=False)
    data = np.concatenate(blocks, axis=1) if blocks else np.zeros((len(table), 0), dtype=np.int64)

    encoded = EncodedTable(
        sub_column_names=[s.name for s in subs],
        cardinalities=[s.cardinality for s in subs],
        data=data,
        groups=groups,
        group_keys=group_keys,
    )
    encoded.validate()
    logger.debug("table_encoded", rows=encoded.n_rows, width=encoded.width)
    return encoded


def augment_sequences(encoded: EncodedTable, schema: TableSchema) -> EncodedTable:
    """
    Append the sequence-length and counting-index sub-columns.

    Zero-length groups get one placeholder row so their length can be learned.
    """
    if not schema.is_sequential or encoded.groups is None:
        raise NotSequential("augment_sequences requires a sequential table")

    lengths = encoded.group_lengths()
    bounds = encoded.group_bounds()
    rows: List[np.ndarray] = []
    new_groups: List[np.ndarray] = []
    seq_len: List[np.ndarray] = []
    seq_index: List[np.ndarray] = []
    placeholder: List[np.ndarray] = []
    pad_row = encoded.n_rows  # index of an all-zero row appended below
    for g, (start, stop) in enumerate(bounds):
        length = int(lengths[g])
        if length == 0:
            rows.append(np.array([pad_row]))
            new_groups.append(np.array([g]))
            seq_len.append(np.array([0.0]))
            seq_index.append(np.array([1.0]))
            placeholder.append(np.array([True]))
        else:
            rows.append(np.arange(start, stop))
            new_groups.append(np.full(length, g))
            seq_len.append(np.full(length, float(length)))
            seq_index.append(np.arange(1, length + 1, dtype=float))
            placeholder.append(np.zeros(length, dtype=bool))

    padded = np.vstack([encoded.data, np.zeros((1, encoded.width), dtype=np.int64)])
    row_idx = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    len_block = encode_numeric(schema.seq_len_spec, np.concatenate(seq_len) if seq_len else np.zeros(0))
    index_block = encode_numeric(schema.seq_index_spec, np.concatenate(seq_index) if seq_index else np.zeros(0))
    extra = schema.seq_len_spec.sub_columns + schema.seq_index_spec.sub_columns

    augmented = EncodedTable(
        sub_column_names=list(encoded.sub_column_names) + [s.name for s in extra],
        cardinalities=list(encoded.cardinalities) + [s.cardinality for s in extra],
        data=np.concatenate([padded[row_idx], len_block, index_block], axis=1),
        groups=np.concatenate(new_groups) if new_groups else np.zeros(0, dtype=np.int64),
        group_keys=encoded.group_keys,
        placeholder=np.concatenate(placeholder) if placeholder else np.zeros(0, dtype=bool),
    )
    augmented.validate()
    return augmented


# =============================================================================
# Decode
# =============================================================================

def decode(encoded: EncodedTable, schema: TableSchema, rng: Optional[DecodeRng] = None) -> pd.DataFrame:
    """
    Decode category indices back to a raw table.

    Sequence length/index sub-columns and placeholder rows are dropped.
    RARE decodes to the literal token, MISSING to an empty cell.
    """
    rng = rng or DecodeRng()
    encoded.validate()
    data_width = sum(spec.width for spec in schema.specs)
    if encoded.width < data_width:
        raise ShapeMismatch(f"encoded width {encoded.width} < schema width {data_width}")
    data = encoded.data
    groups = encoded.groups
    if encoded.placeholder is not None and encoded.placeholder.any():
        data = data[~encoded.placeholder]
        groups = groups[~encoded.placeholder] if groups is not None else None

    streams = {i: k for k, i in enumerate(i for i, spec in enumerate(schema.specs) if _is_stochastic(spec))}
    uniforms = rng.uniforms(len(data), len(streams))
    columns: Dict[str, List[str]] = {}
    pos = 0
    for i, spec in enumerate(schema.specs):
        idx = data[:, pos : pos + spec.width]
        pos += spec.width
        u = uniforms[:, streams[i]] if i in streams else None
        if spec.strategy == EncodingStrategy.QUADTILE:
            lat, lon = decode_quadtile(spec, idx)
            columns[spec.source_columns[0]] = lat
            columns[spec.source_columns[1]] = lon
        else:
            columns[spec.column_name] = _decode_spec(spec, idx, u, groups)

    return pd.DataFrame({c: columns[c] for c in schema.data_columns}, dtype=object)


def _decode_spec(
    spec: EncodingSpec, idx: np.ndarray, u: Optional[np.ndarray], groups: Optional[np.ndarray] = None
) -> List[str]:
    if spec.strategy == EncodingStrategy.CATEGORICAL:
        return decode_categorical(spec, idx)
    if spec.strategy == EncodingStrategy.CHARACTER_SPLIT:
        return decode_character(spec, idx)
    if spec.strategy == EncodingStrategy.DATETIME_SPLIT:
        return decode_datetime(spec, idx)
    if spec.strategy == EncodingStrategy.DATETIME_RELATIVE:
        return decode_datetime_relative(spec, idx, u if u is not None else np.zeros(len(idx)), groups)
    values = decode_numeric(spec, idx, u if u is not None else np.zeros(len(idx)))
    return format_numbers(values, spec.is_integer)


# =============================================================================
# Conditions
# =============================================================================

def encode_conditions(schema: TableSchema, conditions: Dict[str, str]) -> Dict[int, int]:
    """
    Map raw-value conditions to fixed indices of global sub-columns.

    A geospatial column is conditioned through both of its lat/lon columns.
    An empty value conditions on MISSING.
    """
    fixed: Dict[int, int] = {}
    offsets = schema.spec_offsets(with_sequence_columns=False)
    remaining = dict(conditions)
    for spec in schema.specs:
        if not any(c in remaining for c in spec.source_columns):
            continue
        if not all(c in remaining for c in spec.source_columns):
            raise ConditionIndexInvalid(f"condition on {spec.column_name} must give {spec.source_columns}")
        if spec.strategy == EncodingStrategy.DATETIME_RELATIVE:
            raise ConditionIndexInvalid(f"relative datetime column {spec.column_name} cannot be conditioned")
        values = {c: str(remaining.pop(c)) for c in spec.source_columns}
        _check_condition_value(spec, values)
        try:
            block = _encode_spec(spec, pd.DataFrame({c: [v] for c, v in values.items()}), None, schema.datetime_formats)
        except SchemaMismatch as e:
            raise ConditionIndexInvalid(f"invalid condition value for {spec.column_name}: {e}") from e
        for j in range(spec.width):
            fixed[offsets[spec.column_name] + j] = int(block[0, j])
    if remaining:
        raise ConditionIndexInvalid(f"unknown condition columns: {sorted(remaining)}")
    return fixed


def _check_condition_value(spec: EncodingSpec, values: Dict[str, str]) -> None:
    if any(v == "" for v in values.values()) and not spec.has_missing:
        raise ConditionIndexInvalid(f"column {spec.column_name} has no MISSING category")
    if spec.strategy == EncodingStrategy.CATEGORICAL:
        value = values[spec.column_name]
        if value != "" and value not in spec.sub_columns[0].labels:
            raise ConditionIndexInvalid(f"value {value!r} is not a category of {spec.column_name}")


_UNSEEN_CHECKS = {
    EncodingStrategy.CATEGORICAL: unseen_categories,
    EncodingStrategy.CHARACTER_SPLIT: unseen_characters,
}


def encode_partial(raw_table: pd.DataFrame, schema: TableSchema) -> Tuple[np.ndarray, np.ndarray]:
    """
    Encode a seed table whose empty cells are left free.

    Cells the schema has no category for (an unseen label in a column without
    RARE) are left free as well; the caller still copies them into the output.

    Returns:
        (indices [n x D], fixed mask [n x D]); free cells hold index 0
    """
    if schema.is_sequential:
        raise NotSequential("seed data is supported for flat tables only")
    n = len(raw_table)
    blocks: List[np.ndarray] = []
    masks: List[np.ndarray] = []
    for spec in schema.specs:
        present = np.ones(n, dtype=bool)
        for column in spec.source_columns:
            if column in raw_table.columns:
                present &= (as_text(raw_table[column]) != "").to_numpy()
            else:
                present[:] = False
        if spec.strategy == EncodingStrategy.DATETIME_RELATIVE:
            present[:] = False
        check = _UNSEEN_CHECKS.get(spec.strategy)
        if check is not None and present.any():
            unseen = present & check(spec, as_text(raw_table[spec.source_columns[0]]))
            if unseen.any():
                logger.info("seed_cells_left_free", column=spec.column_name, cells=int(unseen.sum()))
                present &= ~unseen
        block = np.zeros((n, spec.width), dtype=np.int64)
        if present.any():
            subset = raw_table.loc[present, [c for c in spec.source_columns]].reset_index(drop=True)
            try:
                block[present] = _encode_spec(spec, subset, None, schema.datetime_formats)
            except SchemaMismatch as e:
                raise ConditionIndexInvalid(f"seed data: {e}") from e
        blocks.append(block)
        masks.append(np.repeat(present[:, None], spec.width, axis=1))
    if not blocks:
        return np.zeros((n, 0), dtype=np.int64), np.zeros((n, 0), dtype=bool)
    return np.concatenate(blocks, axis=1), np.concatenate(masks, axis=1)


def missing_slots(schema: TableSchema, columns: Sequence[str]) -> Dict[int, List[int]]:
    """Global sub-column -> category indices carrying MISSING for the given raw columns."""
    offsets = schema.spec_offsets(with_sequence_columns=False)
    slots: Dict[int, List[int]] = {}
    wanted = set(columns)
    known = set(schema.data_columns) | {s.column_name for s in schema.specs}
    unknown = wanted - known
    if unknown:
        raise ConditionIndexInvalid(f"unknown impute columns: {sorted(unknown)}")
    for spec in schema.specs:
        if not (wanted & (set(spec.source_columns) | {spec.column_name})):
            continue
        for j, k in spec.missing_slots():
            slots.setdefault(offsets[spec.column_name] + j, []).append(k)
    return slots


__all__ = [
    "DecodeRng",
    "encode",
    "decode",
    "augment_sequences",
    "encode_conditions",
    "encode_partial",
    "missing_slots",
]
