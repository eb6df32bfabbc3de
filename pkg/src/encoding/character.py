"""Character strategy: one sub-column per character position."""

from typing import List

import numpy as np
import pandas as pd

from ..errors import SchemaMismatch
from ..models.schema import (
    MISSING_TOKEN,
    PAD_TOKEN,
    RARE_TOKEN,
    AnalysisOptions,
    ColumnKind,
    EncodingSpec,
    EncodingStrategy,
    SubColumn,
)
from .values import missing_mask


def analyze_character(name: str, text: pd.Series, opts: AnalysisOptions) -> EncodingSpec:
    missing = missing_mask(text)
    present = text[~missing]
    has_missing = bool(missing.any())
    longest = int(present.str.len().max()) if len(present) else 0
    max_len = max(1, min(opts.max_string_len, longest))

    subs: List[SubColumn] = []
    for pos in range(max_len):
        chars = present.str[pos]
        counts = chars[chars.notna() & (chars != "")].value_counts()
        frequent = sorted(str(c) for c, k in counts.items() if k >= opts.rare_min_count)
        labels = [PAD_TOKEN]
        if pos == 0 and has_missing:
            labels.append(MISSING_TOKEN)
        if (counts < opts.rare_min_count).any():
            labels.append(RARE_TOKEN)
        labels.extend(frequent)
        subs.append(SubColumn(name=f"{name}__c{pos}", cardinality=len(labels), labels=labels))

    return EncodingSpec(
        column_name=name,
        kind=ColumnKind.CHARACTER,
        strategy=EncodingStrategy.CHARACTER_SPLIT,
        source_columns=[name],
        has_missing=has_missing,
        max_string_len=max_len,
        sub_columns=subs,
    )


def encode_character(spec: EncodingSpec, text: pd.Series) -> np.ndarray:
    missing = missing_mask(text)
    out = np.zeros((len(text), spec.width), dtype=np.int64)
    for pos, sub in enumerate(spec.sub_columns):
        lookup = {label: i for i, label in enumerate(sub.labels) if label not in (PAD_TOKEN, MISSING_TOKEN)}
        rare = lookup.pop(RARE_TOKEN, None)
        chars = text.str[pos].fillna("")
        idx = chars.map(lookup).to_numpy()
        present = (chars != "").to_numpy() & ~missing
        unknown = present & pd.isna(idx)
        if unknown.any():
            if rare is None:
                raise SchemaMismatch(
                    f"column {spec.column_name}: unseen character {chars[unknown].iloc[0]!r} at position {pos}"
                )
            idx[unknown] = rare
        col = np.zeros(len(text), dtype=np.int64)
        col[present] = idx[present].astype(np.int64)
        out[:, pos] = col
    if missing.any():
        miss = spec.sub_columns[0].labels.index(MISSING_TOKEN) if spec.has_missing else None
        if miss is None:
            raise SchemaMismatch(f"column {spec.column_name} has missing values but no MISSING category")
        out[missing, 0] = miss
    return out


def unseen_mask(spec: EncodingSpec, text: pd.Series) -> np.ndarray:
    """Non-missing cells holding a character never seen at its position (and no RARE there)."""
    out = np.zeros(len(text), dtype=bool)
    for pos, sub in enumerate(spec.sub_columns):
        if RARE_TOKEN in sub.labels:
            continue
        known = [label for label in sub.labels if label not in (PAD_TOKEN, MISSING_TOKEN)]
        chars = text.str[pos].fillna("")
        out |= ((chars != "") & ~chars.isin(known)).to_numpy()
    return out & ~missing_mask(text)


def decode_character(spec: EncodingSpec, idx: np.ndarray) -> List[str]:
    labels = [sub.labels for sub in spec.sub_columns]
    out: List[str] = []
    for row in idx:
        chars: List[str] = []
        for pos, i in enumerate(row):
            label = labels[pos][i]
            if label == PAD_TOKEN or label == MISSING_TOKEN:
                break
            chars.append(label)
        out.append("".join(chars))
    return out
