"""
Permutation masking.

A head for sub-column i may only see the embeddings of sub-columns that
come strictly before i in the current order; everything else is zeroed
in its concatenated input.
"""

from typing import List, Sequence

import numpy as np

from ..errors import ShapeMismatch


def ranks(order: Sequence[int]) -> np.ndarray:
    """rank[j] = position of sub-column j in `order`."""
    order = np.asarray(order, dtype=np.int64)
    if np.any(np.sort(order) != np.arange(order.size)):
        raise ShapeMismatch("order is not a permutation", order=order.tolist())
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return rank


def predecessor_mask(rank: np.ndarray, target: int) -> np.ndarray:
    return rank < rank[target]


def expand_mask(sub_column_mask: np.ndarray, widths: Sequence[int], dtype: type) -> np.ndarray:
    """Per-sub-column booleans repeated over each embedding block."""
    return np.repeat(sub_column_mask, widths).astype(dtype)


def block_offsets(widths: Sequence[int]) -> np.ndarray:
    return np.concatenate([[0], np.cumsum(widths)]).astype(np.int64)


def masked_input(embeddings: List[np.ndarray], order: Sequence[int], target: int) -> np.ndarray:
    """
    Concatenate per-sub-column embeddings in canonical order, zeroing every
    sub-column that is not a strict predecessor of `target` under `order`.

    Args:
        embeddings: One [..., e_j] array per sub-column
        order: Permutation of sub-column indices
        target: Sub-column whose head receives the input

    Returns:
        [..., sum(e_j)] masked concatenation
    """
    if len(embeddings) != len(order):
        raise ShapeMismatch(f"{len(embeddings)} embeddings for an order of length {len(order)}")
    full = np.concatenate(embeddings, axis=-1)
    keep = predecessor_mask(ranks(order), target)
    return full * expand_mask(keep, [e.shape[-1] for e in embeddings], full.dtype)
