"""Adam optimiser over a named parameter dictionary."""

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from ..errors import NonFiniteValue, ShapeMismatch
from .params import Params


@dataclass
class AdamState:
    lr: float = 1e-3
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    step_count: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: Params, grads: Params, state: AdamState) -> None:
    """Apply one bias-corrected Adam update to `params` in place."""
    for name, grad in grads.items():
        if name not in params:
            raise ShapeMismatch(f"gradient for unknown parameter {name}")
        if grad.shape != params[name].shape:
            raise ShapeMismatch(f"gradient shape {grad.shape} != parameter shape {params[name].shape}", name=name)
        if not np.all(np.isfinite(grad)):
            raise NonFiniteValue(f"non-finite gradient for {name}", where=name)

    state.step_count += 1
    beta1, beta2 = state.betas
    correction1 = 1.0 - beta1 ** state.step_count
    correction2 = 1.0 - beta2 ** state.step_count
    for name, grad in grads.items():
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(params[name])
            state.v[name] = np.zeros_like(params[name])
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        update = state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        params[name] -= update.astype(params[name].dtype)
