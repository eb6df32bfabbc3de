"""Floating-point precision switch: float32 for training, float64 for gradient checks."""

from contextlib import contextmanager
from typing import Iterator

import numpy as np

_dtype = np.float32


def get_dtype() -> type:
    return _dtype


def set_dtype(dtype: type) -> None:
    global _dtype
    if dtype not in (np.float32, np.float64):
        raise ValueError("dtype must be float32 or float64")
    _dtype = dtype


@contextmanager
def float64_mode() -> Iterator[None]:
    """Run the enclosed block with 64-bit parameters and activations."""
    previous = _dtype
    set_dtype(np.float64)
    try:
        yield
    finally:
        set_dtype(previous)
