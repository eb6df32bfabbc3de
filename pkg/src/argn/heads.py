"""
Column heads: a regressor block of dense+ReLU(+dropout) layers followed by
a linear predictor over the sub-column's categories.
"""

from typing import Dict, List, Optional, Tuple

import numpy as np

from ..kernel.layers import (
    dense_backward,
    dense_forward,
    dropout_backward,
    dropout_forward,
    relu_backward,
    relu_forward,
)
from ..kernel.params import Params, glorot_uniform, zeros


def head_prefix(i: int) -> str:
    return f"head.{i}"


def init_head(
    rng: np.random.Generator,
    prefix: str,
    n_in: int,
    n_units: int,
    n_out: int,
    depth: int,
) -> Params:
    params: Params = {}
    width = n_in
    for layer in range(depth):
        params[f"{prefix}.reg{layer}.w"] = glorot_uniform(rng, (width, n_units))
        params[f"{prefix}.reg{layer}.b"] = zeros((n_units,))
        width = n_units
    params[f"{prefix}.out.w"] = glorot_uniform(rng, (width, n_out))
    params[f"{prefix}.out.b"] = zeros((n_out,))
    return params


def head_forward(
    params: Params,
    prefix: str,
    x: np.ndarray,
    depth: int,
    dropout: float = 0.0,
    rng: Optional[np.random.Generator] = None,
    training: bool = False,
) -> Tuple[np.ndarray, List[tuple]]:
    """Logits [..., n_out] for input x [..., n_in]."""
    caches: List[tuple] = []
    h = x
    for layer in range(depth):
        z, dense_cache = dense_forward(h, params[f"{prefix}.reg{layer}.w"], params[f"{prefix}.reg{layer}.b"])
        a, relu_mask = relu_forward(z)
        h, keep = dropout_forward(a, dropout, rng, training)
        caches.append((dense_cache, relu_mask, keep))
    logits, out_cache = dense_forward(h, params[f"{prefix}.out.w"], params[f"{prefix}.out.b"])
    caches.append(out_cache)
    return logits, caches


def head_backward(
    prefix: str,
    d_logits: np.ndarray,
    caches: List[tuple],
    depth: int,
) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
    """Returns (d_input, parameter gradients)."""
    grads: Dict[str, np.ndarray] = {}
    dh, grads[f"{prefix}.out.w"], grads[f"{prefix}.out.b"] = dense_backward(d_logits, caches[-1])
    for layer in reversed(range(depth)):
        dense_cache, relu_mask, keep = caches[layer]
        da = dropout_backward(dh, keep)
        dz = relu_backward(da, relu_mask)
        dh, grads[f"{prefix}.reg{layer}.w"], grads[f"{prefix}.reg{layer}.b"] = dense_backward(dz, dense_cache)
    return dh, grads
