"""Categorical strategy: dictionary encoding with rare-category protection."""

from typing import Dict, List

import numpy as np
import pandas as pd

from ..errors import SchemaMismatch
from ..models.schema import (
    MISSING_TOKEN,
    RARE_TOKEN,
    AnalysisOptions,
    ColumnKind,
    EncodingSpec,
    EncodingStrategy,
    SubColumn,
)
from .values import missing_mask


def analyze_categorical(name: str, text: pd.Series, opts: AnalysisOptions) -> EncodingSpec:
    missing = missing_mask(text)
    counts = text[~missing].value_counts()
    frequent = sorted(str(v) for v, c in counts.items() if c >= opts.rare_min_count)
    has_rare = bool((counts < opts.rare_min_count).any())
    has_missing = bool(missing.any())

    labels: List[str] = []
    if has_missing:
        labels.append(MISSING_TOKEN)
    if has_rare:
        labels.append(RARE_TOKEN)
    labels.extend(frequent)
    if not labels:
        labels.append(MISSING_TOKEN)
        has_missing = True

    return EncodingSpec(
        column_name=name,
        kind=ColumnKind.CATEGORICAL,
        strategy=EncodingStrategy.CATEGORICAL,
        source_columns=[name],
        categories=labels,
        has_missing=has_missing,
        sub_columns=[SubColumn(name=f"{name}__cat", cardinality=len(labels), labels=labels)],
    )


def label_lookup(labels: List[str]) -> Dict[str, int]:
    return {label: i for i, label in enumerate(labels)}


def encode_labels(spec: EncodingSpec, text: pd.Series, labels: List[str]) -> np.ndarray:
    """Dictionary indices; unseen values fall back to RARE, missing cells to MISSING."""
    lookup = label_lookup(labels)
    rare = lookup.get(RARE_TOKEN)
    miss = lookup.get(MISSING_TOKEN)
    missing = missing_mask(text)
    idx = text.map(lookup).to_numpy()

    out = np.empty(len(text), dtype=np.int64)
    known = ~pd.isna(idx)
    out[known] = idx[known].astype(np.int64)
    unknown = ~known & ~missing
    if missing.any():
        if miss is not None:
            out[missing] = miss
        elif rare is not None:
            out[missing] = rare
        else:
            raise SchemaMismatch(f"column {spec.column_name} has missing values but no MISSING category")
    if unknown.any():
        if rare is None:
            example = text[unknown].iloc[0]
            raise SchemaMismatch(f"column {spec.column_name}: unseen value {example!r} and no RARE category")
        out[unknown] = rare
    return out


def unseen_mask(spec: EncodingSpec, text: pd.Series) -> np.ndarray:
    """Non-missing cells with no category of their own and no RARE to fall back to."""
    labels = spec.sub_columns[0].labels
    if RARE_TOKEN in labels:
        return np.zeros(len(text), dtype=bool)
    return ~missing_mask(text) & ~text.isin(labels).to_numpy()


def encode_categorical(spec: EncodingSpec, text: pd.Series) -> np.ndarray:
    return encode_labels(spec, text, spec.sub_columns[0].labels)[:, None]


def decode_categorical(spec: EncodingSpec, idx: np.ndarray) -> List[str]:
    labels = spec.sub_columns[0].labels
    return ["" if labels[i] == MISSING_TOKEN else labels[i] for i in idx[:, 0]]
