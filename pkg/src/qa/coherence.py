"""
Sequential coherence.

For every subject with at least two steps one pair of successive steps is
drawn (or, in exhaustive mode, all pairs with weight 1/(L-1) each). Every
column is then scored by the contingency table of its value at the first
step against its value at the second.
"""

from typing import Dict, Tuple

import numpy as np
import pandas as pd

from ..encoding.values import as_text
from ..errors import NoSequencesOfLengthTwo
from ..models.report import AccuracyScores
from .accuracy import accuracy_from_l1, contingency
from .binning import ColumnBinning


def subject_bounds(df: pd.DataFrame, group_key: str) -> Tuple[np.ndarray, np.ndarray]:
    """Row order grouping each subject's rows (stable), and [n_subjects x 2] bounds into it."""
    codes, _ = pd.factorize(as_text(df[group_key]), sort=False)
    order = np.argsort(codes, kind="stable")
    counts = np.bincount(codes, minlength=int(codes.max()) + 1 if codes.size else 0)
    stops = np.cumsum(counts)
    return order, np.stack([stops - counts, stops], axis=1)


def successive_pairs(
    df: pd.DataFrame,
    group_key: str,
    seed: int,
    exhaustive: bool = False,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row positions (first, second) of successive-step pairs and their weights."""
    order, bounds = subject_bounds(df, group_key)
    lengths = bounds[:, 1] - bounds[:, 0]
    eligible = np.flatnonzero(lengths >= 2)
    if eligible.size == 0:
        raise NoSequencesOfLengthTwo("no subject has two or more steps", subjects=int(len(bounds)))

    if exhaustive:
        firsts, weights = [], []
        for s in eligible:
            start, n = bounds[s, 0], lengths[s]
            firsts.append(np.arange(start, start + n - 1))
            weights.append(np.full(n - 1, 1.0 / (n - 1)))
        first = np.concatenate(firsts)
        w = np.concatenate(weights)
    else:
        rng = np.random.default_rng(seed)
        steps = np.floor(rng.random(eligible.size) * (lengths[eligible] - 1)).astype(np.int64)
        first = bounds[eligible, 0] + steps
        w = np.ones(eligible.size)
    return order[first], order[first + 1], w


def coherence_accuracy(
    trn: pd.DataFrame,
    syn: pd.DataFrame,
    group_key: str,
    trn_bins: Dict[str, np.ndarray],
    syn_bins: Dict[str, np.ndarray],
    binning: Dict[str, ColumnBinning],
    seed: int = 0,
    exhaustive: bool = False,
) -> AccuracyScores:
    t_first, t_second, t_w = successive_pairs(trn, group_key, seed, exhaustive)
    s_first, s_second, s_w = successive_pairs(syn, group_key, seed, exhaustive)
    per_column: Dict[str, float] = {}
    for column, b in binning.items():
        label = f"{column}|{column}'"
        c_trn = contingency(trn_bins[column][t_first], trn_bins[column][t_second], b.n_groups, b.n_groups, label, t_w)
        c_syn = contingency(syn_bins[column][s_first], syn_bins[column][s_second], b.n_groups, b.n_groups, label, s_w)
        per_column[column] = accuracy_from_l1(c_trn, c_syn)
    overall = float(np.mean(list(per_column.values()))) if per_column else 1.0
    return AccuracyScores(overall=min(1.0, max(0.0, overall)), per_column=per_column)
