"""
Univariate, bivariate and overall accuracy.

Each score compares normalised frequency vectors (or contingency tables)
of binned training and synthetic columns: acc = 1 - L1 / 2.
"""

from itertools import combinations
from typing import Dict, List, Optional

import numpy as np

from ..errors import EmptyColumn
from ..models.report import AccuracyScores
from .binning import DROPPED, ColumnBinning


def _bounded(x: float) -> float:
    return float(min(1.0, max(0.0, x)))


def accuracy_from_l1(p: np.ndarray, q: np.ndarray) -> float:
    return _bounded(1.0 - 0.5 * float(np.abs(p - q).sum()))


def frequencies(groups: np.ndarray, n_groups: int, column: str, weights: Optional[np.ndarray] = None) -> np.ndarray:
    """Normalised group frequencies over the rows that are not dropped."""
    kept = groups != DROPPED
    w = np.ones(len(groups)) if weights is None else np.asarray(weights, dtype=float)
    counts = np.bincount(groups[kept], weights=w[kept], minlength=n_groups)
    total = counts.sum()
    if total <= 0:
        raise EmptyColumn(f"column {column} has no values left after binning", column=column)
    return counts / total


def contingency(
    a: np.ndarray,
    b: np.ndarray,
    n_a: int,
    n_b: int,
    label: str,
    weights: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Normalised [n_a x n_b] contingency table over rows kept in both columns."""
    kept = (a != DROPPED) & (b != DROPPED)
    w = np.ones(len(a)) if weights is None else np.asarray(weights, dtype=float)
    flat = np.bincount(a[kept] * n_b + b[kept], weights=w[kept], minlength=n_a * n_b)
    total = flat.sum()
    if total <= 0:
        raise EmptyColumn(f"no rows left for {label} after binning", pair=label)
    return (flat / total).reshape(n_a, n_b)


def univariate_accuracy(
    trn_bins: Dict[str, np.ndarray],
    syn_bins: Dict[str, np.ndarray],
    binning: Dict[str, ColumnBinning],
) -> AccuracyScores:
    per_column: Dict[str, float] = {}
    for column, b in binning.items():
        p = frequencies(trn_bins[column], b.n_groups, column)
        q = frequencies(syn_bins[column], b.n_groups, column)
        per_column[column] = accuracy_from_l1(p, q)
    overall = float(np.mean(list(per_column.values()))) if per_column else 1.0
    return AccuracyScores(overall=_bounded(overall), per_column=per_column)


def bivariate_accuracy(
    trn_bins: Dict[str, np.ndarray],
    syn_bins: Dict[str, np.ndarray],
    binning: Dict[str, ColumnBinning],
) -> Optional[AccuracyScores]:
    """Mean over column pairs m < n; None for single-column tables."""
    columns: List[str] = list(binning)
    if len(columns) < 2:
        return None
    per_pair: Dict[str, float] = {}
    for m, n in combinations(columns, 2):
        label = f"{m}|{n}"
        bm, bn = binning[m], binning[n]
        c_trn = contingency(trn_bins[m], trn_bins[n], bm.n_groups, bn.n_groups, label)
        c_syn = contingency(syn_bins[m], syn_bins[n], bm.n_groups, bn.n_groups, label)
        per_pair[label] = accuracy_from_l1(c_trn, c_syn)
    return AccuracyScores(overall=_bounded(float(np.mean(list(per_pair.values())))), per_column=per_pair)


def overall_accuracy(
    univariate: float,
    bivariate: Optional[float] = None,
    coherence: Optional[float] = None,
) -> float:
    """Mean of the available component accuracies."""
    parts = [univariate] + [x for x in (bivariate, coherence) if x is not None]
    return _bounded(float(np.mean(parts)))
