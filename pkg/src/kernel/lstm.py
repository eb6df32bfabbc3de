"""
Single-layer LSTM with backpropagation through time.

Gate layout along the 4H axis is input, forget, output, candidate.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import ShapeMismatch
from .params import glorot_uniform, zeros


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def init_lstm(rng: np.random.Generator, n_in: int, n_hidden: int, prefix: str) -> Dict[str, np.ndarray]:
    b = zeros((4 * n_hidden,))
    b[n_hidden : 2 * n_hidden] = 1.0
    return {
        f"{prefix}.wx": glorot_uniform(rng, (n_in, 4 * n_hidden)),
        f"{prefix}.wh": glorot_uniform(rng, (n_hidden, 4 * n_hidden)),
        f"{prefix}.b": b,
    }


@dataclass
class LSTMCache:
    x: np.ndarray
    gates: List[Tuple[np.ndarray, ...]] = field(default_factory=list)


def lstm_step(
    x_t: np.ndarray,
    h_prev: np.ndarray,
    c_prev: np.ndarray,
    wx: np.ndarray,
    wh: np.ndarray,
    b: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, tuple]:
    n_hidden = wh.shape[0]
    a = x_t @ wx + h_prev @ wh + b
    i = sigmoid(a[:, :n_hidden])
    f = sigmoid(a[:, n_hidden : 2 * n_hidden])
    o = sigmoid(a[:, 2 * n_hidden : 3 * n_hidden])
    g = np.tanh(a[:, 3 * n_hidden :])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (i, f, o, g, tc, h_prev, c_prev)


def lstm_forward(
    x: np.ndarray,
    wx: np.ndarray,
    wh: np.ndarray,
    b: np.ndarray,
    h0: Optional[np.ndarray] = None,
    c0: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray, LSTMCache]:
    """
    Run the LSTM over x [B, T, F].

    Returns:
        (hidden states [B, T, H], last hidden state [B, H], cache)
    """
    if x.ndim != 3 or x.shape[2] != wx.shape[0]:
        raise ShapeMismatch(f"LSTM input shape {x.shape} does not match weights {wx.shape}")
    batch, steps, _ = x.shape
    n_hidden = wh.shape[0]
    h = np.zeros((batch, n_hidden), dtype=wx.dtype) if h0 is None else h0
    c = np.zeros((batch, n_hidden), dtype=wx.dtype) if c0 is None else c0
    hs = np.zeros((batch, steps, n_hidden), dtype=wx.dtype)
    cache = LSTMCache(x=x)
    for t in range(steps):
        h, c, step_cache = lstm_step(x[:, t], h, c, wx, wh, b)
        hs[:, t] = h
        cache.gates.append(step_cache)
    return hs, h, cache


def lstm_backward(
    d_hs: np.ndarray,
    cache: LSTMCache,
    wx: np.ndarray,
    wh: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Returns (dx, dwx, dwh, db)."""
    x = cache.x
    batch, steps, _ = x.shape
    n_hidden = wh.shape[0]
    dx = np.zeros_like(x)
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros((4 * n_hidden,), dtype=wx.dtype)
    dh_next = np.zeros((batch, n_hidden), dtype=wx.dtype)
    dc_next = np.zeros((batch, n_hidden), dtype=wx.dtype)
    for t in reversed(range(steps)):
        i, f, o, g, tc, h_prev, c_prev = cache.gates[t]
        dh = d_hs[:, t] + dh_next
        do = dh * tc
        dc = dc_next + dh * o * (1.0 - tc * tc)
        df = dc * c_prev
        di = dc * g
        dg = dc * i
        dc_next = dc * f
        da = np.concatenate(
            [di * i * (1.0 - i), df * f * (1.0 - f), do * o * (1.0 - o), dg * (1.0 - g * g)],
            axis=1,
        )
        dwx += x[:, t].T @ da
        dwh += h_prev.T @ da
        db += da.sum(axis=0)
        dx[:, t] = da @ wx.T
        dh_next = da @ wh.T
    return dx, dwx, dwh, db
