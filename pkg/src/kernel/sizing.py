"""Layer-size heuristics.

All sizes are rounded half-up and floored at 1.
"""

import math


def round_half_up(x: float) -> int:
    return max(1, int(math.floor(x + 0.5)))


def embed_dim(d_in: int) -> int:
    """Embedding width of a sub-column with `d_in` categories."""
    if d_in < 1:
        raise ValueError("d_in must be >= 1")
    return round_half_up(3.0 * d_in ** 0.25)


def regressor_units(d_in: int) -> int:
    if d_in < 1:
        raise ValueError("d_in must be >= 1")
    return round_half_up(16.0 * max(1.0, math.log(d_in)))


def context_units(d_ctx: int) -> int:
    if d_ctx < 1:
        raise ValueError("d_ctx must be >= 1")
    return round_half_up(64.0 * max(1.0, math.log(d_ctx)))


def history_units(d_tgt: int, s_q50: float) -> int:
    if d_tgt < 1 or s_q50 < 1:
        raise ValueError("d_tgt and s_q50 must be >= 1")
    return round_half_up(32.0 * max(1.0, math.log(d_tgt * s_q50)))
