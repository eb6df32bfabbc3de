"""Central finite-difference gradient checks, run under float64."""

from typing import Callable

import numpy as np

from .params import Params


def numerical_gradient(loss_fn: Callable[[], float], params: Params, name: str, h: float = 1e-5) -> np.ndarray:
    """Estimate d loss / d params[name] by central differences; params are restored."""
    target = params[name]
    grad = np.zeros_like(target)
    it = np.nditer(target, flags=["multi_index"])
    for _ in it:
        pos = it.multi_index
        original = target[pos]
        target[pos] = original + h
        plus = loss_fn()
        target[pos] = original - h
        minus = loss_fn()
        target[pos] = original
        grad[pos] = (plus - minus) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """Max over entries of |a - n| / max(floor, |a| + |n|)."""
    denom = np.maximum(floor, np.abs(analytic) + np.abs(numeric))
    return float(np.max(np.abs(analytic - numeric) / denom)) if analytic.size else 0.0
