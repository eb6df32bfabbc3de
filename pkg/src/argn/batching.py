"""Padded sequence batches and max-sequence-window selection."""

from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from ..models.encoded import EncodedTable, SequenceBatch, TrainingData


def window_span(length: int, window: int, rng: np.random.Generator) -> Tuple[int, int]:
    """
    [start, stop) of a training window over a sequence of `length` steps.

    The raw start is uniform on [-window + 1, length - 1] and the window is
    clipped to [0, length], so every step is covered by exactly `window`
    of the raw starts.
    """
    if length <= window:
        return 0, length
    raw = int(rng.integers(-window + 1, length))
    return max(raw, 0), min(raw + window, length)


def build_sequence_batch(
    table: EncodedTable,
    group_ids: Sequence[int],
    window: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    context: Optional[np.ndarray] = None,
    bounds: Optional[np.ndarray] = None,
) -> SequenceBatch:
    """
    Gather whole groups (or one window of each) into a zero-padded batch.

    Args:
        table: Sequence table with length/index sub-columns appended
        group_ids: Groups to include, in batch order
        window: Max steps per sequence; None keeps full sequences
        rng: Draws window starts
        context: Encoded context rows aligned with the table's groups
        bounds: Precomputed table.group_bounds()
    """
    bounds = table.group_bounds() if bounds is None else bounds
    group_ids = np.asarray(group_ids, dtype=np.int64)
    spans = []
    for g in group_ids:
        start, stop = int(bounds[g, 0]), int(bounds[g, 1])
        n = stop - start
        if window is not None and n > window:
            lo, hi = window_span(n, window, rng if rng is not None else np.random.default_rng(0))
            start, stop = start + lo, start + hi
        spans.append((start, stop))

    steps = max((stop - start for start, stop in spans), default=0)
    batch = len(spans)
    idx = np.zeros((batch, max(steps, 1), table.width), dtype=np.int64)
    valid = np.zeros((batch, max(steps, 1)), dtype=bool)
    data_mask = np.zeros_like(valid)
    lengths = np.zeros(batch, dtype=np.int64)
    for b, (start, stop) in enumerate(spans):
        n = stop - start
        idx[b, :n] = table.data[start:stop]
        valid[b, :n] = True
        if table.placeholder is not None:
            data_mask[b, :n] = ~table.placeholder[start:stop]
        else:
            data_mask[b, :n] = True
        lengths[b] = n

    return SequenceBatch(
        idx=idx,
        valid=valid,
        data_mask=data_mask,
        lengths=lengths,
        context=context[group_ids] if context is not None else None,
        meta={"groups": group_ids},
    )


def iter_sequence_batches(
    data: TrainingData,
    batch_size: int,
    rng: np.random.Generator,
    window: Optional[int],
    shuffle: bool = True,
) -> Iterator[SequenceBatch]:
    table = data.table
    bounds = table.group_bounds()
    context = data.context.data if data.context is not None else None
    groups = rng.permutation(table.n_groups) if shuffle else np.arange(table.n_groups)
    for start in range(0, groups.size, batch_size):
        yield build_sequence_batch(table, groups[start : start + batch_size], window, rng, context, bounds)
