"""
Metric binning.

Numeric and datetime columns are grouped into deciles of the training
data; categorical columns keep their most frequent training categories
and drop every other row. Missing cells always form their own group.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from ..encoding.values import as_text, missing_mask, parse_datetime, parse_numeric
from ..models.report import MetricsOptions
from ..models.schema import ColumnKind, TableSchema

DROPPED = -1

_NUMERIC_KINDS = {ColumnKind.NUMERIC, ColumnKind.DATETIME, ColumnKind.DATETIME_RELATIVE, ColumnKind.GEOSPATIAL}
_DATETIME_KINDS = {ColumnKind.DATETIME, ColumnKind.DATETIME_RELATIVE}


@dataclass
class ColumnBinning:
    """Grouping of one raw column; group ids run 0..n_groups-1, the last one is MISSING."""

    column: str
    numeric: bool
    edges: np.ndarray = field(default_factory=lambda: np.zeros(0))  # interior decile edges
    categories: List[str] = field(default_factory=list)
    datetime_formats: Optional[List[str]] = None

    @property
    def n_groups(self) -> int:
        return (len(self.edges) + 2) if self.numeric else (len(self.categories) + 1)

    @property
    def missing_group(self) -> int:
        return self.n_groups - 1

    def _values(self, text: pd.Series) -> np.ndarray:
        if self.datetime_formats is not None:
            values, _ = parse_datetime(text, self.datetime_formats)
        else:
            values, _ = parse_numeric(text)
        return values

    def assign(self, column: pd.Series) -> np.ndarray:
        """Group id per cell; DROPPED for categories outside the kept set or unparseable cells."""
        text = as_text(column)
        missing = missing_mask(text)
        out = np.full(len(text), DROPPED, dtype=np.int64)
        out[missing] = self.missing_group
        if self.numeric:
            values = self._values(text)
            ok = ~missing & ~np.isnan(values)
            out[ok] = np.searchsorted(self.edges, values[ok], side="right")
            return out
        lookup = {c: i for i, c in enumerate(self.categories)}
        mapped = text.map(lookup)
        kept = mapped.notna().to_numpy() & ~missing
        out[kept] = mapped[kept].to_numpy().astype(np.int64)
        return out


def metric_kinds(schema: TableSchema) -> Dict[str, ColumnKind]:
    """Kind of every raw data column; lat/lon of a geospatial pair count as numeric."""
    kinds: Dict[str, ColumnKind] = {}
    for spec in schema.specs:
        for column in spec.source_columns:
            kinds[column] = spec.kind
    return kinds


def fit_column(column: str, text: pd.Series, kind: ColumnKind, opts: MetricsOptions, formats: List[str]) -> ColumnBinning:
    text = as_text(text)
    missing = missing_mask(text)
    if kind in _NUMERIC_KINDS:
        binning = ColumnBinning(
            column=column, numeric=True, datetime_formats=list(formats) if kind in _DATETIME_KINDS else None
        )
        values = binning._values(text)
        present = values[~missing & ~np.isnan(values)]
        if present.size:
            edges = np.unique(np.quantile(present, np.linspace(0.0, 1.0, opts.n_groups + 1)))
            binning.edges = edges[1:-1]
        return binning

    counts = text[~missing].value_counts()
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return ColumnBinning(column=column, numeric=False, categories=[c for c, _ in ranked[: opts.top_k]])


def fit_binning(trn: pd.DataFrame, schema: TableSchema, opts: MetricsOptions) -> Dict[str, ColumnBinning]:
    """Binning of every data column, fit on the training table only."""
    kinds = metric_kinds(schema)
    return {
        column: fit_column(column, trn[column], kinds[column], opts, schema.datetime_formats)
        for column in schema.data_columns
    }


def bin_table(df: pd.DataFrame, binning: Dict[str, ColumnBinning]) -> Dict[str, np.ndarray]:
    return {column: b.assign(df[column]) for column, b in binning.items()}
