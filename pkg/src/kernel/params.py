"""Parameter initialisation and the float32 weight blob format."""

import json
from typing import Dict, List, Tuple

import numpy as np

from ..errors import ShapeMismatch
from .precision import get_dtype

Params = Dict[str, np.ndarray]


def glorot_uniform(rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    """Uniform in +-sqrt(6 / (fan_in + fan_out)); fans are the first and last axis."""
    fan_in, fan_out = shape[0], shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(get_dtype())


def zeros(shape: Tuple[int, ...]) -> np.ndarray:
    return np.zeros(shape, dtype=get_dtype())


def zeros_like(params: Params) -> Params:
    return {name: np.zeros_like(value) for name, value in params.items()}


def pack_params(params: Params) -> Tuple[bytes, List[dict]]:
    """Little-endian float32 blob in name order plus its manifest (name, shape, offset)."""
    manifest: List[dict] = []
    chunks: List[bytes] = []
    offset = 0
    for name in sorted(params):
        raw = np.ascontiguousarray(params[name], dtype="<f4").tobytes()
        manifest.append({"name": name, "shape": list(params[name].shape), "offset": offset})
        chunks.append(raw)
        offset += len(raw)
    return b"".join(chunks), manifest


def unpack_params(blob: bytes, manifest: List[dict]) -> Params:
    params: Params = {}
    for entry in manifest:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        stop = start + 4 * count
        if stop > len(blob):
            raise ShapeMismatch(f"weight blob too short for {entry['name']}")
        params[entry["name"]] = np.frombuffer(blob[start:stop], dtype="<f4").reshape(shape).astype(np.float32)
    return params


def manifest_json(manifest: List[dict]) -> str:
    return json.dumps(manifest, sort_keys=True)
