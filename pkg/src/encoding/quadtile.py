"""Geospatial strategy: web-mercator quadtiles, one sub-column per zoom level.

Quadrant digit = x_bit + 2 * y_bit, so NW/NE/SW/SE = 0/1/2/3. A point on a
tile boundary belongs to the lower-index tile.
"""

from typing import List, Tuple

import numpy as np

from ..errors import SchemaMismatch
from ..models.schema import (
    MISSING_TOKEN,
    AnalysisOptions,
    ColumnKind,
    EncodingSpec,
    EncodingStrategy,
    SubColumn,
)
from .values import format_float

MAX_LATITUDE = 85.05112878
_QUADRANTS = ["0", "1", "2", "3"]


def project(lat: np.ndarray, lon: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Unit-square web-mercator coordinates (y = 0 at the north edge)."""
    lat = np.radians(np.clip(lat, -MAX_LATITUDE, MAX_LATITUDE))
    x = (np.asarray(lon, dtype=float) + 180.0) / 360.0
    y = (1.0 - np.log(np.tan(lat) + 1.0 / np.cos(lat)) / np.pi) / 2.0
    return np.clip(x, 0.0, 1.0), np.clip(y, 0.0, 1.0)


def tiles(x: np.ndarray, y: np.ndarray, depth: int) -> Tuple[np.ndarray, np.ndarray]:
    n = 2 ** depth
    tx = np.clip(np.ceil(x * n).astype(np.int64) - 1, 0, n - 1)
    ty = np.clip(np.ceil(y * n).astype(np.int64) - 1, 0, n - 1)
    return tx, ty


def choose_depth(x: np.ndarray, y: np.ndarray, max_depth: int, leaf_target: int) -> int:
    """Smallest depth at which the median occupied tile holds fewer than `leaf_target` points."""
    for depth in range(1, max_depth + 1):
        tx, ty = tiles(x, y, depth)
        _, counts = np.unique(tx * (2 ** depth) + ty, return_counts=True)
        if counts.size == 0 or np.median(counts) < leaf_target:
            return depth
    return max_depth


def analyze_quadtile(
    name: str, lat_col: str, lon_col: str, lat: np.ndarray, lon: np.ndarray, opts: AnalysisOptions
) -> EncodingSpec:
    missing = np.isnan(lat) | np.isnan(lon)
    x, y = project(lat[~missing], lon[~missing])
    depth = choose_depth(x, y, opts.quadtile_max_depth, opts.quadtile_leaf_target) if x.size else 1
    has_missing = bool(missing.any())
    labels = _QUADRANTS + ([MISSING_TOKEN] if has_missing else [])
    return EncodingSpec(
        column_name=name,
        kind=ColumnKind.GEOSPATIAL,
        strategy=EncodingStrategy.QUADTILE,
        source_columns=[lat_col, lon_col],
        has_missing=has_missing,
        quadtile_depth=depth,
        sub_columns=[
            SubColumn(name=f"{name}__q{level}", cardinality=len(labels), labels=list(labels))
            for level in range(1, depth + 1)
        ],
    )


def encode_quadtile(spec: EncodingSpec, lat: np.ndarray, lon: np.ndarray) -> np.ndarray:
    depth = spec.quadtile_depth
    missing = np.isnan(lat) | np.isnan(lon)
    x, y = project(np.where(missing, 0.0, lat), np.where(missing, 0.0, lon))
    tx, ty = tiles(x, y, depth)
    out = np.empty((len(lat), depth), dtype=np.int64)
    for level in range(1, depth + 1):
        shift = depth - level
        out[:, level - 1] = ((tx >> shift) & 1) + 2 * ((ty >> shift) & 1)
    if missing.any():
        if not spec.has_missing:
            raise SchemaMismatch(f"column {spec.column_name} has missing coordinates but no MISSING category")
        out[missing] = 4
    return out


def decode_quadtile(spec: EncodingSpec, idx: np.ndarray) -> Tuple[List[str], List[str]]:
    """Tile centres as (lat, lon) text columns; any MISSING level makes both cells empty."""
    depth = spec.quadtile_depth
    missing = (idx >= 4).any(axis=1)
    digits = np.where(idx >= 4, 0, idx)
    tx = np.zeros(len(idx), dtype=np.int64)
    ty = np.zeros(len(idx), dtype=np.int64)
    for level in range(depth):
        tx = (tx << 1) | (digits[:, level] & 1)
        ty = (ty << 1) | (digits[:, level] >> 1)
    n = 2 ** depth
    lon = (tx + 0.5) / n * 360.0 - 180.0
    lat = np.degrees(np.arctan(np.sinh(np.pi * (1.0 - 2.0 * (ty + 0.5) / n))))
    lat_text = ["" if m else format_float(round(float(v), 6)) for v, m in zip(lat, missing)]
    lon_text = ["" if m else format_float(round(float(v), 6)) for v, m in zip(lon, missing)]
    return lat_text, lon_text
