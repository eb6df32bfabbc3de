"""
Dense building blocks with explicit forward/backward passes.

Every forward returns (output, cache); the matching backward takes the
upstream gradient and the cache and returns input and parameter gradients.
"""

from typing import Optional, Tuple

import numpy as np

from ..errors import IndexOutOfRange, NonFiniteValue, ShapeMismatch
from .precision import get_dtype


def check_finite(where: str, *arrays: np.ndarray) -> None:
    for array in arrays:
        if not np.all(np.isfinite(array)):
            raise NonFiniteValue(f"non-finite values in {where}", where=where)


def embedding_forward(table: np.ndarray, idx: np.ndarray) -> np.ndarray:
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise IndexOutOfRange(
            f"embedding index outside [0, {table.shape[0]})",
            low=int(idx.min()),
            high=int(idx.max()),
        )
    return table[idx]


def embedding_backward(d_out: np.ndarray, idx: np.ndarray, n_rows: int) -> np.ndarray:
    """Scatter-add rows of `d_out` into a gradient of the embedding table."""
    grad = np.zeros((n_rows, d_out.shape[-1]), dtype=d_out.dtype)
    np.add.at(grad, idx.reshape(-1), d_out.reshape(-1, d_out.shape[-1]))
    return grad


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, tuple]:
    if x.shape[-1] != w.shape[0]:
        raise ShapeMismatch(f"dense input width {x.shape[-1]} != weight rows {w.shape[0]}")
    return x @ w + b, (x, w)


def dense_backward(d_out: np.ndarray, cache: tuple) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    x, w = cache
    x2 = x.reshape(-1, x.shape[-1])
    d2 = d_out.reshape(-1, d_out.shape[-1])
    dw = x2.T @ d2
    db = d2.sum(axis=0)
    dx = d_out @ w.T
    return dx, dw, db


def relu_forward(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mask = x > 0
    return x * mask, mask


def relu_backward(d_out: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return d_out * mask


def dropout_forward(
    x: np.ndarray,
    rate: float,
    rng: Optional[np.random.Generator],
    training: bool,
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Inverted dropout; identity outside training."""
    if not training or rate <= 0.0 or rng is None:
        return x, None
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return x * keep, keep


def dropout_backward(d_out: np.ndarray, keep: Optional[np.ndarray]) -> np.ndarray:
    return d_out if keep is None else d_out * keep


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(
    logits: np.ndarray,
    target: np.ndarray,
    mask: Optional[np.ndarray] = None,
) -> Tuple[float, np.ndarray]:
    """
    Mean cross-entropy over the unmasked positions and its gradient.

    Args:
        logits: [..., C]
        target: integer labels with the leading shape of logits
        mask: optional boolean weights with the same shape as target

    Returns:
        (loss, d_logits); loss is 0 when no position is unmasked
    """
    n_classes = logits.shape[-1]
    flat_logits = logits.reshape(-1, n_classes)
    flat_target = target.reshape(-1)
    if flat_target.size and (flat_target.min() < 0 or flat_target.max() >= n_classes):
        raise IndexOutOfRange(f"target index outside [0, {n_classes})")
    weights = np.ones(flat_target.shape, dtype=get_dtype()) if mask is None else mask.reshape(-1).astype(get_dtype())
    count = float(weights.sum())
    if count == 0.0:
        return 0.0, np.zeros_like(logits)

    shifted = flat_logits - flat_logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(flat_target.size)
    nll = log_z - shifted[rows, flat_target]
    loss = float((nll * weights).sum() / count)

    grad = softmax(flat_logits)
    grad[rows, flat_target] -= 1.0
    grad *= (weights / count)[:, None]
    return loss, grad.reshape(logits.shape).astype(logits.dtype)
