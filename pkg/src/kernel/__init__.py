"""Numeric kernel: layers, LSTM, Adam and parameter storage on numpy."""

from .optim import AdamState, adam_step
from .params import Params, glorot_uniform, pack_params, unpack_params
from .precision import float64_mode, get_dtype
from .sizing import context_units, embed_dim, history_units, regressor_units, round_half_up

__all__ = [
    "AdamState",
    "adam_step",
    "Params",
    "glorot_uniform",
    "pack_params",
    "unpack_params",
    "float64_mode",
    "get_dtype",
    "context_units",
    "embed_dim",
    "history_units",
    "regressor_units",
    "round_half_up",
]
