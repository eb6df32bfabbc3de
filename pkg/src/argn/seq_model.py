"""
Sequential-table network.

Same-step sub-columns are modelled as in the flat network. Each head also
receives the history state of an LSTM run over the causally shifted step
embeddings (zero step prepended, last step dropped) and, for two-table
models, an embedding of the subject's context row. The length and index
sub-columns always lead the order; only data sub-columns are shuffled.
"""

from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from ..encoding.numeric import decode_numeric, encode_numeric
from ..errors import ConditionIndexInvalid, ContextSchemaMismatch, ShapeMismatch
from ..kernel.layers import (
    check_finite,
    dense_backward,
    dense_forward,
    dropout_backward,
    dropout_forward,
    embedding_backward,
    embedding_forward,
    relu_backward,
    relu_forward,
    softmax_cross_entropy,
)
from ..kernel.lstm import init_lstm, lstm_backward, lstm_forward, lstm_step
from ..kernel.params import Params, glorot_uniform, zeros
from ..kernel.precision import get_dtype
from ..models.architecture import Architecture, ModelKind
from ..models.encoded import EncodedTable, SequenceBatch, TrainingData
from ..models.schema import EncodingSpec
from .batching import iter_sequence_batches
from .heads import head_backward, head_forward, head_prefix, init_head
from .masking import block_offsets, expand_mask, predecessor_mask, ranks
from .sampling import draw

logger = structlog.get_logger(__name__)


class SequentialModel:
    """Any-order autoregressive network over steps of grouped sequences."""

    def __init__(
        self,
        arch: Architecture,
        params: Optional[Params] = None,
        seed: int = 0,
        max_seq_window: int = 100,
    ):
        if arch.kind != ModelKind.SEQUENTIAL:
            raise ShapeMismatch("SequentialModel requires a sequential architecture")
        self.arch = arch
        self.params = params if params is not None else self.init_params(arch, seed)
        self.window = max_seq_window
        self.offsets = block_offsets(arch.embed_dims)
        self.context_offsets = block_offsets(arch.context_embed_dims)

    @staticmethod
    def init_params(arch: Architecture, seed: int) -> Params:
        rng = np.random.default_rng(seed)
        params: Params = {}
        for i, (card, width) in enumerate(zip(arch.cardinalities, arch.embed_dims)):
            params[f"emb.{i}"] = glorot_uniform(rng, (card, width))
        params.update(init_lstm(rng, arch.embed_width, arch.history_units, "history"))
        if arch.has_context:
            for j, (card, width) in enumerate(zip(arch.context_cardinalities, arch.context_embed_dims)):
                params[f"ctx.emb.{j}"] = glorot_uniform(rng, (card, width))
            params["ctx.dense.w"] = glorot_uniform(rng, (arch.context_width, arch.context_units))
            params["ctx.dense.b"] = zeros((arch.context_units,))
        for i, card in enumerate(arch.cardinalities):
            params.update(
                init_head(
                    rng, head_prefix(i), arch.head_input_width, arch.regressor_units[i], card, arch.regressor_depth
                )
            )
        return params

    # ------------------------------------------------------------------
    # Orders
    # ------------------------------------------------------------------

    @property
    def n_sub_columns(self) -> int:
        return self.arch.n_sub_columns

    @property
    def leading(self) -> List[int]:
        return self.arch.length_columns + self.arch.index_columns

    def canonical_order(self) -> np.ndarray:
        return np.array(self.leading + list(range(self.arch.n_data_columns)), dtype=np.int64)

    def draw_order(self, rng: np.random.Generator) -> np.ndarray:
        return np.array(self.leading + rng.permutation(self.arch.n_data_columns).tolist(), dtype=np.int64)

    # ------------------------------------------------------------------
    # Components
    # ------------------------------------------------------------------

    def embed_steps(self, idx: np.ndarray) -> np.ndarray:
        """Concatenated step embeddings [B, T, S] of indices [B, T, D]."""
        if idx.ndim != 3 or idx.shape[2] != self.n_sub_columns:
            raise ShapeMismatch(f"expected [B, T, {self.n_sub_columns}] indices, got {idx.shape}")
        blocks = [embedding_forward(self.params[f"emb.{j}"], idx[..., j]) for j in range(self.n_sub_columns)]
        return np.concatenate(blocks, axis=-1)

    def encode_history(
        self,
        e_all: np.ndarray,
        rng: Optional[np.random.Generator] = None,
        training: bool = False,
    ) -> Tuple[np.ndarray, tuple]:
        """History states [B, T, H]; the state at step t only sees steps < t."""
        if e_all.ndim != 3 or e_all.shape[1] < 1:
            raise ShapeMismatch("history input must be [B, T >= 1, S]")
        x, keep = dropout_forward(e_all, self.arch.dropout, rng, training)
        shifted = np.zeros_like(x)
        shifted[:, 1:] = x[:, :-1]
        hs, _, lstm_cache = lstm_forward(
            shifted, self.params["history.wx"], self.params["history.wh"], self.params["history.b"]
        )
        return hs, (keep, lstm_cache)

    def _history_backward(self, d_hs: np.ndarray, cache: tuple) -> Tuple[np.ndarray, Params]:
        keep, lstm_cache = cache
        d_shifted, dwx, dwh, db = lstm_backward(d_hs, lstm_cache, self.params["history.wx"], self.params["history.wh"])
        dx = np.zeros_like(d_shifted)
        dx[:, :-1] = d_shifted[:, 1:]
        return dropout_backward(dx, keep), {"history.wx": dwx, "history.wh": dwh, "history.b": db}

    def context_embed(
        self,
        context_idx: Optional[np.ndarray],
        rng: Optional[np.random.Generator] = None,
        training: bool = False,
    ) -> Tuple[Optional[np.ndarray], Optional[tuple]]:
        """Context embedding [B, context_units], or None for single-table models."""
        arch = self.arch
        if not arch.has_context:
            return None, None
        if context_idx is None:
            raise ContextSchemaMismatch("model was trained with a context table; context rows are required")
        if context_idx.ndim != 2 or context_idx.shape[1] != len(arch.context_cardinalities):
            raise ContextSchemaMismatch(
                f"context rows have shape {context_idx.shape}, expected [B, {len(arch.context_cardinalities)}]"
            )
        blocks = [
            embedding_forward(self.params[f"ctx.emb.{j}"], context_idx[:, j])
            for j in range(len(arch.context_cardinalities))
        ]
        e_ctx = np.concatenate(blocks, axis=1)
        z, dense_cache = dense_forward(e_ctx, self.params["ctx.dense.w"], self.params["ctx.dense.b"])
        a, relu_mask = relu_forward(z)
        c, keep = dropout_forward(a, arch.dropout, rng, training)
        return c, (context_idx, dense_cache, relu_mask, keep)

    def _context_backward(self, d_c: np.ndarray, cache: tuple) -> Params:
        context_idx, dense_cache, relu_mask, keep = cache
        dz = relu_backward(dropout_backward(d_c, keep), relu_mask)
        d_e_ctx, dw, db = dense_backward(dz, dense_cache)
        grads: Params = {"ctx.dense.w": dw, "ctx.dense.b": db}
        for j, card in enumerate(self.arch.context_cardinalities):
            block = d_e_ctx[:, self.context_offsets[j] : self.context_offsets[j + 1]]
            grads[f"ctx.emb.{j}"] = embedding_backward(block, context_idx[:, j], card)
        return grads

    def _head_input(self, e_masked: np.ndarray, hs: np.ndarray, c: Optional[np.ndarray]) -> np.ndarray:
        parts = [e_masked, hs]
        if c is not None:
            parts.append(np.broadcast_to(c[:, None, :], hs.shape[:2] + (c.shape[1],)))
        return np.concatenate(parts, axis=-1)

    # ------------------------------------------------------------------
    # Forward / backward
    # ------------------------------------------------------------------

    def _run(
        self,
        batch: SequenceBatch,
        order: Sequence[int],
        rng: Optional[np.random.Generator],
        training: bool,
        with_grads: bool,
        keep_logits: bool = False,
    ) -> Tuple[float, Optional[Params], List[np.ndarray]]:
        arch = self.arch
        rank = ranks(order)
        idx = batch.idx
        e_all = self.embed_steps(idx)
        hs, history_cache = self.encode_history(e_all, rng, training)
        c, context_cache = self.context_embed(batch.context, rng, training)

        width_e, width_h = arch.embed_width, arch.history_units
        d_e_all = np.zeros_like(e_all) if with_grads else None
        d_hs = np.zeros_like(hs) if with_grads else None
        d_c = np.zeros_like(c) if (with_grads and c is not None) else None
        grads: Params = {}
        logits_out: List[np.ndarray] = []
        length_columns = set(arch.length_columns)
        total = 0.0

        for i in range(self.n_sub_columns):
            keep = expand_mask(predecessor_mask(rank, i), arch.embed_dims, e_all.dtype)
            x = self._head_input(e_all * keep, hs, c)
            logits, caches = head_forward(
                self.params, head_prefix(i), x, arch.regressor_depth, arch.dropout, rng, training
            )
            if keep_logits:
                logits_out.append(logits)
            mask = batch.valid if i in length_columns else batch.data_mask
            loss_i, d_logits = softmax_cross_entropy(logits, idx[..., i], mask)
            total += loss_i
            if with_grads:
                dx, head_grads = head_backward(head_prefix(i), d_logits, caches, arch.regressor_depth)
                d_e_all += dx[..., :width_e] * keep
                d_hs += dx[..., width_e : width_e + width_h]
                if d_c is not None:
                    d_c += dx[..., width_e + width_h :].sum(axis=1)
                grads.update(head_grads)

        if not with_grads or not np.isfinite(total):
            return total, None, logits_out

        d_e_history, history_grads = self._history_backward(d_hs, history_cache)
        d_e_all += d_e_history
        grads.update(history_grads)
        if d_c is not None:
            grads.update(self._context_backward(d_c, context_cache))
        for j in range(self.n_sub_columns):
            block = d_e_all[..., self.offsets[j] : self.offsets[j + 1]]
            grads[f"emb.{j}"] = embedding_backward(block, idx[..., j], arch.cardinalities[j])
        check_finite("sequential model gradients", *grads.values())
        return total, grads, logits_out

    def loss_and_grads(
        self,
        batch: SequenceBatch,
        rng: Optional[np.random.Generator] = None,
        order: Optional[Sequence[int]] = None,
        training: bool = True,
        with_grads: bool = True,
    ) -> Tuple[float, Optional[Params]]:
        """Sum over heads of the mean cross-entropy over valid steps, and its gradients."""
        if order is None:
            order = self.draw_order(rng if rng is not None else np.random.default_rng(0))
        loss, grads, _ = self._run(batch, order, rng, training, with_grads)
        return loss, grads

    def reference_logits(self, batch: SequenceBatch) -> List[np.ndarray]:
        """Logits of every head under the canonical order, inference mode."""
        _, _, logits = self._run(batch, self.canonical_order(), None, False, False, keep_logits=True)
        return logits

    # ------------------------------------------------------------------
    # Training interface
    # ------------------------------------------------------------------

    def iter_batches(self, data: TrainingData, batch_size: int, rng: np.random.Generator) -> Iterator[SequenceBatch]:
        return iter_sequence_batches(data, batch_size, rng, window=self.window)

    def evaluate(self, data: TrainingData, batch_size: int = 256) -> float:
        """Sequence-weighted mean loss on full sequences, canonical order, no dropout."""
        n = data.table.n_groups
        if n == 0:
            return 0.0
        order = self.canonical_order()
        total = 0.0
        batches = iter_sequence_batches(data, batch_size, np.random.default_rng(0), window=None, shuffle=False)
        for batch in batches:
            loss, _ = self.loss_and_grads(batch, order=order, training=False, with_grads=False)
            total += loss * batch.batch_size
        return total / n

    # ------------------------------------------------------------------
    # Sampling
    # ------------------------------------------------------------------

    def sample_sequences(
        self,
        n_sequences: int,
        length_spec: EncodingSpec,
        index_spec: EncodingSpec,
        context: Optional[np.ndarray] = None,
        temperature: float = 1.0,
        seed: int = 0,
        conditions: Optional[Dict[int, int]] = None,
        excluded: Optional[Dict[int, List[int]]] = None,
        argmax_below: float = 1e-6,
        batch_size: int = 1024,
    ) -> EncodedTable:
        """
        Generate `n_sequences` sequences step by step.

        The length is drawn once at the first step and held fixed; the index
        sub-columns are written deterministically as 1..L. Sequence s uses
        the random stream [seed, s], one block of D uniforms per step.

        Args:
            n_sequences: Sequences to generate (one per context row when given)
            length_spec: Encoding of the sequence-length column
            index_spec: Encoding of the counting-index column
            context: Encoded context rows [n_sequences, D_ctx]
            conditions: Data sub-column -> index fixed at every step
            excluded: Data sub-column -> slots that must not be drawn

        Returns:
            EncodedTable with one group per sequence (empty groups allowed)
        """
        arch = self.arch
        conditions = dict(conditions or {})
        for sub_column, index in conditions.items():
            if not 0 <= sub_column < arch.n_data_columns:
                raise ConditionIndexInvalid(f"condition on non-data sub-column {sub_column}")
            if not 0 <= index < arch.cardinalities[sub_column]:
                raise ConditionIndexInvalid(
                    f"condition index {index} outside sub-column {sub_column} (cardinality {arch.cardinalities[sub_column]})"
                )
        if context is not None and len(context) != n_sequences:
            raise ContextSchemaMismatch(f"{len(context)} context rows for {n_sequences} sequences")
        if arch.has_context and context is None and n_sequences > 0:
            raise ContextSchemaMismatch("model was trained with a context table; context rows are required")

        data_visit = sorted(conditions) + [i for i in range(arch.n_data_columns) if i not in conditions]
        rows: List[np.ndarray] = []
        groups: List[np.ndarray] = []
        for start in range(0, n_sequences, batch_size):
            ids = np.arange(start, min(start + batch_size, n_sequences))
            ctx = context[ids] if context is not None else None
            steps, lengths = self._sample_batch(
                ids, ctx, length_spec, index_spec, data_visit, conditions, excluded or {},
                temperature, seed, argmax_below,
            )
            for b, seq in enumerate(ids):
                rows.append(steps[b, : lengths[b]])
                groups.append(np.full(lengths[b], seq, dtype=np.int64))

        data = np.concatenate(rows) if rows else np.zeros((0, self.n_sub_columns), dtype=np.int64)
        table = EncodedTable(
            sub_column_names=list(arch.sub_column_names),
            cardinalities=list(arch.cardinalities),
            data=data.reshape(-1, self.n_sub_columns),
            groups=np.concatenate(groups) if groups else np.zeros(0, dtype=np.int64),
            group_keys=[str(s) for s in range(n_sequences)],
        )
        logger.debug("sequences_sampled", sequences=n_sequences, rows=table.n_rows, temperature=temperature)
        return table

    def _sample_batch(
        self,
        ids: np.ndarray,
        context: Optional[np.ndarray],
        length_spec: EncodingSpec,
        index_spec: EncodingSpec,
        data_visit: List[int],
        conditions: Dict[int, int],
        excluded: Dict[int, List[int]],
        temperature: float,
        seed: int,
        argmax_below: float,
    ) -> Tuple[np.ndarray, np.ndarray]:
        arch = self.arch
        n = ids.size
        dtype = get_dtype()
        streams = [np.random.default_rng([int(seed), int(s)]) for s in ids]
        c, _ = self.context_embed(context)
        h = np.zeros((n, arch.history_units), dtype=dtype)
        cell = np.zeros_like(h)
        prev = np.zeros((n, arch.embed_width), dtype=dtype)
        lengths = np.zeros(n, dtype=np.int64)
        length_codes: Optional[np.ndarray] = None
        steps: List[np.ndarray] = []

        t = 0
        while True:
            h, cell, _ = lstm_step(prev, h, cell, self.params["history.wx"], self.params["history.wh"], self.params["history.b"])
            uniforms = np.stack([s.random(self.n_sub_columns) for s in streams])
            e_step = np.zeros((n, arch.embed_width), dtype=dtype)
            step = np.zeros((n, self.n_sub_columns), dtype=np.int64)
            visited = np.zeros(self.n_sub_columns, dtype=bool)

            def write(i: int, picks: np.ndarray) -> None:
                step[:, i] = picks
                e_step[:, self.offsets[i] : self.offsets[i + 1]] = self.params[f"emb.{i}"][picks]
                visited[i] = True

            def head(i: int) -> np.ndarray:
                keep = expand_mask(visited, arch.embed_dims, dtype)
                x = self._head_input((e_step * keep)[:, None, :], h[:, None, :], c)
                logits, _ = head_forward(self.params, head_prefix(i), x, arch.regressor_depth)
                return logits[:, 0, :]

            if t == 0:
                for i in arch.length_columns:
                    write(i, draw(head(i), uniforms[:, i], temperature, None, argmax_below))
                lengths = self._decode_lengths(length_spec, step[:, arch.length_columns])
                length_codes = encode_numeric(length_spec, lengths.astype(float))
            for k, i in enumerate(arch.length_columns):
                write(i, length_codes[:, k])
            index_codes = encode_numeric(index_spec, np.full(n, float(t + 1)))
            for k, i in enumerate(arch.index_columns):
                write(i, index_codes[:, k])
            for i in data_visit:
                if i in conditions:
                    write(i, np.full(n, conditions[i], dtype=np.int64))
                else:
                    write(i, draw(head(i), uniforms[:, i], temperature, excluded.get(i), argmax_below))

            steps.append(step)
            prev = e_step
            t += 1
            if t >= int(lengths.max(initial=0)):
                break

        return np.stack(steps, axis=1), lengths

    @staticmethod
    def _decode_lengths(length_spec: EncodingSpec, codes: np.ndarray) -> np.ndarray:
        values = decode_numeric(length_spec, codes, np.zeros(len(codes)))
        values = np.nan_to_num(values, nan=0.0)
        return np.maximum(np.rint(values), 0).astype(np.int64)
