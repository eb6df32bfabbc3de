"""
Encoded table containers.

`EncodedTable` is the columnar matrix of category indices that every model
trains on; `SequenceBatch` is its padded [batch x time x sub-column] view
used by the sequential model.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from ..errors import IndexOutOfRange, SchemaMismatch

_MAGIC = b"ENCT"


@dataclass
class EncodedTable:
    """Matrix of category indices [n_rows x D] plus optional sequence grouping."""

    sub_column_names: List[str]
    cardinalities: List[int]
    data: np.ndarray
    groups: Optional[np.ndarray] = None  # per-row group index, contiguous and ordered
    group_keys: Optional[List[str]] = None  # key per group, incl. zero-length groups
    placeholder: Optional[np.ndarray] = None  # rows standing in for zero-length groups

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.int64).reshape(-1, len(self.sub_column_names))
        if len(self.cardinalities) != len(self.sub_column_names):
            raise SchemaMismatch("cardinalities and sub-column names differ in length")
        if self.groups is not None:
            self.groups = np.asarray(self.groups, dtype=np.int64)
            if len(self.groups) != len(self.data):
                raise SchemaMismatch("groups must have one entry per row")
            if len(self.groups) > 1 and np.any(np.diff(self.groups) < 0):
                raise SchemaMismatch("rows of one group must be contiguous and ordered")
        if self.placeholder is not None:
            self.placeholder = np.asarray(self.placeholder, dtype=bool)

    # ------------------------------------------------------------------
    # Shape helpers
    # ------------------------------------------------------------------

    @property
    def n_rows(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def is_sequential(self) -> bool:
        return self.groups is not None

    @property
    def n_groups(self) -> int:
        if self.group_keys is not None:
            return len(self.group_keys)
        if self.groups is None or len(self.groups) == 0:
            return 0
        return int(self.groups.max()) + 1

    def validate(self) -> None:
        """Raise IndexOutOfRange if any index exceeds its sub-column cardinality."""
        if self.n_rows == 0:
            return
        cards = np.asarray(self.cardinalities)
        bad = (self.data < 0) | (self.data >= cards[None, :])
        if bad.any():
            row, col = np.argwhere(bad)[0]
            raise IndexOutOfRange(
                f"index {self.data[row, col]} out of range for sub-column "
                f"{self.sub_column_names[col]} (cardinality {cards[col]})"
            )

    def group_bounds(self) -> np.ndarray:
        """[n_groups x 2] start/stop row offsets; zero-length groups have start == stop."""
        n_groups = self.n_groups
        if self.groups is None:
            raise SchemaMismatch("table has no sequence grouping")
        counts = np.bincount(self.groups, minlength=n_groups)[:n_groups]
        stops = np.cumsum(counts)
        starts = stops - counts
        return np.stack([starts, stops], axis=1)

    def group_lengths(self) -> np.ndarray:
        """Sequence length per group; placeholder rows count as length 0."""
        bounds = self.group_bounds()
        lengths = bounds[:, 1] - bounds[:, 0]
        if self.placeholder is not None and self.placeholder.any():
            lengths = lengths.copy()
            lengths[self.groups[self.placeholder]] = 0
        return lengths

    # ------------------------------------------------------------------
    # Slicing
    # ------------------------------------------------------------------

    def take_rows(self, rows: Sequence[int]) -> "EncodedTable":
        rows = np.asarray(rows, dtype=np.int64)
        return EncodedTable(
            sub_column_names=list(self.sub_column_names),
            cardinalities=list(self.cardinalities),
            data=self.data[rows],
        )

    def take_groups(self, group_ids: Sequence[int]) -> "EncodedTable":
        """Sub-table of whole groups, renumbered 0..k-1 in the given order."""
        bounds = self.group_bounds()
        rows: List[np.ndarray] = []
        new_groups: List[np.ndarray] = []
        for new_id, gid in enumerate(group_ids):
            start, stop = bounds[gid]
            rows.append(np.arange(start, stop))
            new_groups.append(np.full(stop - start, new_id, dtype=np.int64))
        row_idx = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
        return EncodedTable(
            sub_column_names=list(self.sub_column_names),
            cardinalities=list(self.cardinalities),
            data=self.data[row_idx],
            groups=np.concatenate(new_groups) if new_groups else np.zeros(0, dtype=np.int64),
            group_keys=[self.group_keys[g] for g in group_ids] if self.group_keys is not None else None,
            placeholder=self.placeholder[row_idx] if self.placeholder is not None else None,
        )

    def with_columns(self, names: List[str], cards: List[int], block: np.ndarray) -> "EncodedTable":
        """Copy of the table with extra sub-columns appended on the right."""
        return EncodedTable(
            sub_column_names=list(self.sub_column_names) + list(names),
            cardinalities=list(self.cardinalities) + list(cards),
            data=np.concatenate([self.data, np.asarray(block, dtype=np.int64).reshape(self.n_rows, -1)], axis=1),
            groups=self.groups,
            group_keys=self.group_keys,
            placeholder=self.placeholder,
        )

    # ------------------------------------------------------------------
    # Binary cache
    # ------------------------------------------------------------------

    def to_bytes(self) -> bytes:
        header = {
            "sub_columns": [
                {"name": n, "cardinality": int(c)} for n, c in zip(self.sub_column_names, self.cardinalities)
            ],
            "n_rows": self.n_rows,
            "group_keys": self.group_keys,
            "groups": self.groups.tolist() if self.groups is not None else None,
            "placeholder": np.flatnonzero(self.placeholder).tolist() if self.placeholder is not None else None,
        }
        header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
        body = self.data.astype("<u4").tobytes(order="C")
        return _MAGIC + struct.pack("<I", len(header_bytes)) + header_bytes + body

    @classmethod
    def from_bytes(cls, blob: bytes) -> "EncodedTable":
        if blob[:4] != _MAGIC:
            raise SchemaMismatch("not an encoded table cache")
        (header_len,) = struct.unpack("<I", blob[4:8])
        header = json.loads(blob[8 : 8 + header_len].decode("utf-8"))
        names = [s["name"] for s in header["sub_columns"]]
        cards = [s["cardinality"] for s in header["sub_columns"]]
        data = np.frombuffer(blob[8 + header_len :], dtype="<u4").astype(np.int64)
        data = data.reshape(header["n_rows"], len(names))
        placeholder = None
        if header.get("placeholder") is not None:
            placeholder = np.zeros(header["n_rows"], dtype=bool)
            placeholder[header["placeholder"]] = True
        return cls(
            sub_column_names=names,
            cardinalities=cards,
            data=data,
            groups=np.asarray(header["groups"]) if header.get("groups") is not None else None,
            group_keys=header.get("group_keys"),
            placeholder=placeholder,
        )

    def save(self, path: Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: Path) -> "EncodedTable":
        return cls.from_bytes(Path(path).read_bytes())


@dataclass
class SequenceBatch:
    """Padded sequences [batch x T_max x D_seq] with per-position masks."""

    idx: np.ndarray  # int64 [B, T, D]
    valid: np.ndarray  # bool [B, T] positions < length (placeholders included)
    data_mask: np.ndarray  # bool [B, T] valid and not a zero-length placeholder
    lengths: np.ndarray  # int64 [B] steps per sequence in this batch
    context: Optional[np.ndarray] = None  # int64 [B, D_ctx]
    meta: dict = field(default_factory=dict)

    @property
    def batch_size(self) -> int:
        return int(self.idx.shape[0])

    @property
    def steps(self) -> int:
        return int(self.idx.shape[1])


@dataclass
class TrainingData:
    """Encoded target table plus, for two-table models, the context row of every group."""

    table: EncodedTable
    context: Optional[EncodedTable] = None

    def __post_init__(self) -> None:
        if self.context is not None:
            if not self.table.is_sequential:
                raise SchemaMismatch("a context table requires a sequential target table")
            if self.context.n_rows != self.table.n_groups:
                raise SchemaMismatch(
                    f"context has {self.context.n_rows} rows for {self.table.n_groups} groups"
                )

    @property
    def n_units(self) -> int:
        """Rows (flat) or groups (sequential); the unit of splitting and batching."""
        return self.table.n_groups if self.table.is_sequential else self.table.n_rows

    def take(self, units: Sequence[int]) -> "TrainingData":
        if self.table.is_sequential:
            return TrainingData(
                table=self.table.take_groups(units),
                context=self.context.take_rows(units) if self.context is not None else None,
            )
        return TrainingData(table=self.table.take_rows(units))
