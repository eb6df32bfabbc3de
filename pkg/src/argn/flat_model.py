"""
Flat-table network.

Each sub-column has an embedding table and a head. During training one
random order is drawn per batch and every head sees the ground-truth
embeddings of its predecessors under that order.
Sampling visits sub-columns one at a time, feeding each draw back in.
"""

from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from ..errors import ConditionIndexInvalid, ShapeMismatch
from ..kernel.layers import check_finite, embedding_backward, embedding_forward, softmax_cross_entropy
from ..kernel.params import Params, glorot_uniform
from ..kernel.precision import get_dtype
from ..models.architecture import Architecture, ModelKind
from ..models.encoded import TrainingData
from .heads import head_backward, head_forward, head_prefix, init_head
from .masking import block_offsets, expand_mask, predecessor_mask, ranks
from .sampling import draw, stream_uniforms

logger = structlog.get_logger(__name__)


def check_fixed_values(values: np.ndarray, mask: np.ndarray, cardinalities: Sequence[int]) -> None:
    cards = np.asarray(cardinalities)[None, :]
    bad = mask & ((values < 0) | (values >= cards))
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise ConditionIndexInvalid(
            f"fixed index {values[row, col]} outside sub-column {col} (cardinality {cards[0, col]})",
            row=int(row),
            sub_column=int(col),
        )


class FlatModel:
    """Any-order autoregressive network over the sub-columns of a flat table."""

    def __init__(self, arch: Architecture, params: Optional[Params] = None, seed: int = 0):
        if arch.kind != ModelKind.FLAT:
            raise ShapeMismatch("FlatModel requires a flat architecture")
        self.arch = arch
        self.params = params if params is not None else self.init_params(arch, seed)
        self.offsets = block_offsets(arch.embed_dims)

    @staticmethod
    def init_params(arch: Architecture, seed: int) -> Params:
        rng = np.random.default_rng(seed)
        params: Params = {}
        for i, (card, width) in enumerate(zip(arch.cardinalities, arch.embed_dims)):
            params[f"emb.{i}"] = glorot_uniform(rng, (card, width))
        for i, card in enumerate(arch.cardinalities):
            params.update(
                init_head(rng, head_prefix(i), arch.embed_width, arch.regressor_units[i], card, arch.regressor_depth)
            )
        return params

    # ------------------------------------------------------------------
    # Orders
    # ------------------------------------------------------------------

    @property
    def n_sub_columns(self) -> int:
        return self.arch.n_sub_columns

    def canonical_order(self) -> np.ndarray:
        return np.arange(self.n_sub_columns)

    def draw_order(self, rng: np.random.Generator) -> np.ndarray:
        return rng.permutation(self.n_sub_columns)

    # ------------------------------------------------------------------
    # Forward / backward
    # ------------------------------------------------------------------

    def embed(self, idx: np.ndarray) -> np.ndarray:
        """Concatenated embeddings [B, S] of an index matrix [B, D]."""
        if idx.ndim != 2 or idx.shape[1] != self.n_sub_columns:
            raise ShapeMismatch(f"expected [B, {self.n_sub_columns}] indices, got {idx.shape}")
        blocks = [embedding_forward(self.params[f"emb.{j}"], idx[:, j]) for j in range(self.n_sub_columns)]
        return np.concatenate(blocks, axis=1)

    def head_logits(self, idx: np.ndarray, order: Sequence[int], target: int) -> np.ndarray:
        """Inference-mode logits of one head under `order`."""
        keep = expand_mask(predecessor_mask(ranks(order), target), self.arch.embed_dims, get_dtype())
        logits, _ = head_forward(self.params, head_prefix(target), self.embed(idx) * keep, self.arch.regressor_depth)
        return logits

    def reference_logits(self, idx: np.ndarray) -> List[np.ndarray]:
        """Logits of every head under the canonical order."""
        order = self.canonical_order()
        return [self.head_logits(idx, order, i) for i in range(self.n_sub_columns)]

    def loss_and_grads(
        self,
        idx: np.ndarray,
        rng: Optional[np.random.Generator] = None,
        order: Optional[Sequence[int]] = None,
        training: bool = True,
        with_grads: bool = True,
    ) -> Tuple[float, Optional[Params]]:
        """
        Summed per-head mean cross-entropy of a batch and its gradients.

        A fresh order is drawn from `rng` unless one is given; dropout is
        active only when `training` is set and an rng is available.
        """
        if order is None:
            order = self.draw_order(rng if rng is not None else np.random.default_rng(0))
        rank = ranks(order)
        arch = self.arch
        e_all = self.embed(idx)
        d_e_all = np.zeros_like(e_all) if with_grads else None
        grads: Params = {}
        total = 0.0

        for i in range(self.n_sub_columns):
            keep = expand_mask(predecessor_mask(rank, i), arch.embed_dims, e_all.dtype)
            logits, caches = head_forward(
                self.params, head_prefix(i), e_all * keep, arch.regressor_depth, arch.dropout, rng, training
            )
            loss_i, d_logits = softmax_cross_entropy(logits, idx[:, i])
            total += loss_i
            if with_grads:
                dx, head_grads = head_backward(head_prefix(i), d_logits, caches, arch.regressor_depth)
                d_e_all += dx * keep
                grads.update(head_grads)

        if not np.isfinite(total):
            return total, None
        if not with_grads:
            return total, None
        for j in range(self.n_sub_columns):
            block = d_e_all[:, self.offsets[j] : self.offsets[j + 1]]
            grads[f"emb.{j}"] = embedding_backward(block, idx[:, j], arch.cardinalities[j])
        check_finite("flat model gradients", *grads.values())
        return total, grads

    # ------------------------------------------------------------------
    # Training interface
    # ------------------------------------------------------------------

    def iter_batches(self, data: TrainingData, batch_size: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
        rows = rng.permutation(data.table.n_rows)
        for start in range(0, rows.size, batch_size):
            yield data.table.data[rows[start : start + batch_size]]

    def evaluate(self, data: TrainingData, batch_size: int = 1024) -> float:
        """Row-weighted mean loss under the canonical order without dropout."""
        n = data.table.n_rows
        if n == 0:
            return 0.0
        order = self.canonical_order()
        total = 0.0
        for start in range(0, n, batch_size):
            batch = data.table.data[start : start + batch_size]
            loss, _ = self.loss_and_grads(batch, order=order, training=False, with_grads=False)
            total += loss * len(batch)
        return total / n

    # ------------------------------------------------------------------
    # Sampling
    # ------------------------------------------------------------------

    def sample(
        self,
        n_rows: int,
        temperature: float = 1.0,
        seed: int = 0,
        conditions: Optional[Dict[int, int]] = None,
        fixed: Optional[Tuple[np.ndarray, np.ndarray]] = None,
        excluded: Optional[Dict[int, List[int]]] = None,
        order: Optional[Sequence[int]] = None,
        argmax_below: float = 1e-6,
        batch_size: int = 4096,
    ) -> np.ndarray:
        """
        Generate `n_rows` index rows.

        Args:
            n_rows: Rows to generate
            temperature: Softmax temperature; argmax below `argmax_below`
            seed: Seed of the per-row random streams
            conditions: Sub-column -> index fixed in every row
            fixed: (values [n, D], mask [n, D]) fixing cells row by row
            excluded: Sub-column -> slots that must not be drawn
            order: Explicit visiting order; default puts fixed sub-columns first

        Returns:
            int64 [n_rows, D]
        """
        n_sub = self.n_sub_columns
        if fixed is not None:
            values = np.asarray(fixed[0], dtype=np.int64).copy()
            mask = np.asarray(fixed[1], dtype=bool).copy()
            if values.shape != (n_rows, n_sub) or mask.shape != (n_rows, n_sub):
                raise ShapeMismatch(f"fixed cells must be [{n_rows}, {n_sub}]")
        else:
            values = np.zeros((n_rows, n_sub), dtype=np.int64)
            mask = np.zeros((n_rows, n_sub), dtype=bool)
        for sub_column, index in (conditions or {}).items():
            if not 0 <= sub_column < n_sub:
                raise ConditionIndexInvalid(f"condition on unknown sub-column {sub_column}")
            values[:, sub_column] = index
            mask[:, sub_column] = True
        check_fixed_values(values, mask, self.arch.cardinalities)
        if order is not None:
            ranks(order)

        out = np.zeros((n_rows, n_sub), dtype=np.int64)
        if n_rows == 0:
            return out
        patterns, inverse = np.unique(mask, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).reshape(-1)
        for p, pattern in enumerate(patterns):
            rows = np.flatnonzero(inverse == p)
            visit = list(order) if order is not None else self.visiting_order(pattern)
            for start in range(0, rows.size, batch_size):
                chunk = rows[start : start + batch_size]
                out[chunk] = self._sample_rows(
                    chunk, visit, pattern, values[chunk], temperature, seed, excluded or {}, argmax_below
                )
        logger.debug("rows_sampled", rows=n_rows, patterns=len(patterns), temperature=temperature)
        return out

    def visiting_order(self, fixed_pattern: np.ndarray) -> List[int]:
        fixed_cols = [i for i in range(self.n_sub_columns) if fixed_pattern[i]]
        free_cols = [i for i in range(self.n_sub_columns) if not fixed_pattern[i]]
        return fixed_cols + free_cols

    def _sample_rows(
        self,
        rows: np.ndarray,
        visit: Sequence[int],
        pattern: np.ndarray,
        fixed_values: np.ndarray,
        temperature: float,
        seed: int,
        excluded: Dict[int, List[int]],
        argmax_below: float,
    ) -> np.ndarray:
        arch = self.arch
        uniforms = stream_uniforms(seed, rows, self.n_sub_columns)
        e_all = np.zeros((rows.size, arch.embed_width), dtype=get_dtype())
        result = np.zeros((rows.size, self.n_sub_columns), dtype=np.int64)
        visited = np.zeros(self.n_sub_columns, dtype=bool)
        for i in visit:
            if pattern[i]:
                picks = fixed_values[:, i]
            else:
                keep = expand_mask(visited, arch.embed_dims, e_all.dtype)
                logits, _ = head_forward(self.params, head_prefix(i), e_all * keep, arch.regressor_depth)
                picks = draw(logits, uniforms[:, i], temperature, excluded.get(i), argmax_below)
            result[:, i] = picks
            e_all[:, self.offsets[i] : self.offsets[i + 1]] = self.params[f"emb.{i}"][picks]
            visited[i] = True
        return result
