"""Any-order autoregressive networks for flat and sequential tables."""

from .batching import build_sequence_batch, iter_sequence_batches, window_span
from .flat_model import FlatModel
from .masking import masked_input, ranks
from .seq_model import SequentialModel

__all__ = [
    "build_sequence_batch",
    "iter_sequence_batches",
    "window_span",
    "FlatModel",
    "masked_input",
    "ranks",
    "SequentialModel",
]
