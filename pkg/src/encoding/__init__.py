"""Schema analysis and the raw <-> index codec."""

from .codec import (
    DecodeRng,
    augment_sequences,
    decode,
    encode,
    encode_conditions,
    encode_partial,
    missing_slots,
)
from .numeric import select_numeric_strategy
from .schema_analyzer import analyze, infer_kind, parse_kinds

__all__ = [
    "DecodeRng",
    "augment_sequences",
    "decode",
    "encode",
    "encode_conditions",
    "encode_partial",
    "missing_slots",
    "select_numeric_strategy",
    "analyze",
    "infer_kind",
    "parse_kinds",
]
