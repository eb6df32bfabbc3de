"""
Distance-to-closest-record (DCR) share.

Records are embedded as L2-normalised one-hot vectors over the metric
groups of each column; sequences are flattened over their first steps.
A synthetic record counts 1 when its nearest neighbour lies in the
training set, 0 when it lies in the holdout set, and 0.5 on a tie.
"""

from typing import Dict, Optional, Protocol, Tuple

import numpy as np
import pandas as pd
import structlog
from sklearn.neighbors import NearestNeighbors

from ..errors import EmptySet
from .binning import DROPPED, ColumnBinning, bin_table
from .coherence import subject_bounds

logger = structlog.get_logger(__name__)

TIE_TOLERANCE = 1e-9


class RecordEmbedder(Protocol):
    """Maps a table to one fixed-length vector per record (row or subject)."""

    def embed(self, df: pd.DataFrame) -> np.ndarray:
        ...


class BinnedOneHotEmbedder:
    """One-hot features over the metric binning, flattened over up to `max_steps` steps."""

    def __init__(self, binning: Dict[str, ColumnBinning], group_key: Optional[str] = None, max_steps: int = 16):
        self.binning = binning
        self.group_key = group_key
        self.max_steps = max_steps
        self.offsets = np.concatenate([[0], np.cumsum([b.n_groups for b in binning.values()])]).astype(np.int64)

    @property
    def row_width(self) -> int:
        return int(self.offsets[-1])

    def _rows(self, df: pd.DataFrame) -> np.ndarray:
        bins = bin_table(df, self.binning)
        out = np.zeros((len(df), self.row_width))
        rows = np.arange(len(df))
        for k, column in enumerate(self.binning):
            groups = bins[column]
            kept = groups != DROPPED
            out[rows[kept], self.offsets[k] + groups[kept]] = 1.0
        return out

    def embed(self, df: pd.DataFrame) -> np.ndarray:
        rows = self._rows(df)
        if self.group_key is None:
            vectors = rows
        else:
            order, bounds = subject_bounds(df, self.group_key)
            vectors = np.zeros((len(bounds), self.max_steps * self.row_width))
            for s, (start, stop) in enumerate(bounds):
                steps = rows[order[start : min(stop, start + self.max_steps)]]
                vectors[s, : steps.size] = steps.reshape(-1)
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        return np.divide(vectors, norms, out=np.zeros_like(vectors), where=norms > 0)


def nearest_distances(reference: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Exact L2 distance from every query to its nearest reference vector."""
    nn = NearestNeighbors(n_neighbors=1).fit(reference)
    _, idx = nn.kneighbors(queries)
    return np.linalg.norm(queries - reference[idx[:, 0]], axis=1)


def dcr_share(
    trn: pd.DataFrame,
    hold: pd.DataFrame,
    syn: pd.DataFrame,
    embedder: RecordEmbedder,
) -> Tuple[float, np.ndarray]:
    """
    Fraction of synthetic records whose nearest neighbour is a training record.

    Returns:
        (share, per-record indicators in {0, 0.5, 1})
    """
    e_trn, e_hold, e_syn = embedder.embed(trn), embedder.embed(hold), embedder.embed(syn)
    for name, emb in (("training", e_trn), ("holdout", e_hold), ("synthetic", e_syn)):
        if len(emb) == 0:
            raise EmptySet(f"{name} set has no records", set=name)
    if len(e_trn) != len(e_hold):
        logger.warning("dcr_unequal_sizes", training=len(e_trn), holdout=len(e_hold))

    d_trn = nearest_distances(e_trn, e_syn)
    d_hold = nearest_distances(e_hold, e_syn)
    indicators = np.where(d_trn < d_hold, 1.0, 0.0)
    indicators[np.abs(d_trn - d_hold) <= TIE_TOLERANCE] = 0.5
    return float(indicators.mean()), indicators
