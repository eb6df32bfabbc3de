"""Tests for the flat and sequential any-order autoregressive networks."""

import numpy as np
import pandas as pd
import pytest
from scipy import stats

from src.argn import FlatModel, SequentialModel, build_sequence_batch, masked_input, ranks, window_span
from src.argn.sampling import draw, tempered_probabilities
from src.encoding import schema_analyzer
from src.encoding.codec import decode
from src.encoding.numeric import analyze_counts, decode_numeric
from src.errors import (
    AllProbabilityMassExcluded,
    ConditionIndexInvalid,
    ContextSchemaMismatch,
    ShapeMismatch,
)
from src.kernel.gradcheck import numerical_gradient, relative_error
from src.kernel.precision import float64_mode
from src.models.architecture import Architecture, ModelKind
from src.models.encoded import EncodedTable, SequenceBatch, TrainingData
from src.models.schema import AnalysisOptions, TableRole
from src.models.training import TrainConfig
from src.pipeline.nodes.train import build_model, encode_table
from src.training.trainer import fit, split


def _flat_model(cards=(3, 4, 2), seed=0, dropout=0.0):
    names = [f"c{i}" for i in range(len(cards))]
    return FlatModel(Architecture.flat(names, list(cards), dropout=dropout), seed=seed)


def _small_seq_arch(with_context=False):
    """Hand-sized sequential network: one data, one length and one index sub-column."""
    return Architecture(
        kind=ModelKind.SEQUENTIAL,
        sub_column_names=["d0", "len", "idx"],
        cardinalities=[3, 4, 3],
        embed_dims=[2, 2, 2],
        regressor_units=[3, 3, 3],
        dropout=0.0,
        n_length_columns=1,
        n_index_columns=1,
        median_length=2.0,
        history_units=3,
        context_sub_column_names=["ctx"] if with_context else [],
        context_cardinalities=[3] if with_context else [],
        context_embed_dims=[2] if with_context else [],
        context_units=2 if with_context else 0,
    )


def _count_specs():
    opts = AnalysisOptions()
    length_spec = analyze_counts("__seq_len__", np.array([1, 2, 3]), opts, include_zero=True)
    index_spec = analyze_counts("__seq_index__", np.array([1, 2, 3]), opts, include_zero=False)
    return length_spec, index_spec


# ----------------------------------------------------------------------------
# Masking
# ----------------------------------------------------------------------------

def test_ranks_rejects_non_permutation():
    with pytest.raises(ShapeMismatch):
        ranks([0, 0, 2])


def test_masked_input_zeroes_non_predecessors():
    blocks = [np.full((2, 2), 1.0), np.full((2, 3), 2.0), np.full((2, 1), 3.0)]
    out = masked_input(blocks, order=[2, 0, 1], target=0)
    np.testing.assert_array_equal(out[0], [0, 0, 0, 0, 0, 3.0])


def test_head_output_ignores_non_predecessors():
    model = _flat_model(cards=(5, 4, 6, 3))
    gen = np.random.default_rng(1)
    order = [2, 0, 3, 1]
    idx = np.stack([gen.integers(0, c, size=8) for c in (5, 4, 6, 3)], axis=1)
    for target in range(4):
        rank = ranks(order)
        others = [j for j in range(4) if rank[j] >= rank[target]]
        changed = idx.copy()
        for j in others:
            changed[:, j] = (changed[:, j] + 1) % model.arch.cardinalities[j]
        before = model.head_logits(idx, order, target)
        after = model.head_logits(changed, order, target)
        assert np.array_equal(before, after)


def test_first_head_in_order_sees_nothing():
    model = _flat_model()
    gen = np.random.default_rng(2)
    idx = np.stack([gen.integers(0, c, size=6) for c in (3, 4, 2)], axis=1)
    logits = model.head_logits(idx, [1, 0, 2], 1)
    assert np.array_equal(logits, np.broadcast_to(logits[0], logits.shape))


# ----------------------------------------------------------------------------
# Flat model
# ----------------------------------------------------------------------------

def test_flat_model_gradients():
    with float64_mode():
        model = _flat_model(cards=(3, 4), seed=3)
        gen = np.random.default_rng(3)
        idx = np.stack([gen.integers(0, 3, size=5), gen.integers(0, 4, size=5)], axis=1)
        order = [1, 0]

        def loss():
            return model.loss_and_grads(idx, order=order, training=False, with_grads=False)[0]

        _, grads = model.loss_and_grads(idx, order=order, training=False)
        assert set(grads) == set(model.params)
        for name in model.params:
            numeric = numerical_gradient(loss, model.params, name, h=1e-4)
            assert relative_error(grads[name], numeric, floor=1e-6) < 1e-4, name


def test_flat_model_rejects_wrong_width():
    with pytest.raises(ShapeMismatch):
        _flat_model().embed(np.zeros((2, 2), dtype=np.int64))


def test_near_zero_temperature_is_argmax():
    model = _flat_model(seed=4)
    rows = model.sample(50, temperature=1e-7, seed=9)
    order = model.canonical_order()
    for i in range(model.n_sub_columns):
        expected = model.head_logits(rows, order, i).argmax(axis=1)
        np.testing.assert_array_equal(rows[:, i], expected)


def test_unit_temperature_matches_head_distribution():
    model = _flat_model(cards=(4,), seed=5)
    n = 20_000
    rows = model.sample(n, temperature=1.0, seed=11)
    logits = model.head_logits(rows[:1], [0], 0)
    probs = tempered_probabilities(logits, 1.0)[0]
    observed = np.bincount(rows[:, 0], minlength=4)
    _, p_value = stats.chisquare(observed, probs * n)
    assert p_value > 1e-3


def test_condition_fixes_column():
    model = _flat_model(seed=6)
    rows = model.sample(40, seed=1, conditions={1: 2})
    assert np.all(rows[:, 1] == 2)


def test_condition_outside_cardinality_raises():
    with pytest.raises(ConditionIndexInvalid):
        _flat_model().sample(3, conditions={2: 5})


def test_excluded_slots_are_never_drawn():
    model = _flat_model(seed=7)
    rows = model.sample(300, seed=2, excluded={0: [0]})
    assert not np.any(rows[:, 0] == 0)


def test_excluding_every_slot_raises():
    model = _flat_model(cards=(2,))
    with pytest.raises(AllProbabilityMassExcluded):
        model.sample(3, excluded={0: [0, 1]})


def test_same_seed_same_rows():
    model = _flat_model(seed=8)
    np.testing.assert_array_equal(model.sample(64, seed=3), model.sample(64, seed=3))
    assert not np.array_equal(model.sample(64, seed=3), model.sample(64, seed=4))


def test_row_stream_does_not_depend_on_batching():
    model = _flat_model(seed=8)
    np.testing.assert_array_equal(model.sample(30, seed=5, batch_size=7), model.sample(30, seed=5))


def test_fixed_cells_are_kept_per_row():
    model = _flat_model(seed=9)
    values = np.zeros((4, 3), dtype=np.int64)
    mask = np.zeros((4, 3), dtype=bool)
    values[0, 1], mask[0, 1] = 3, True
    values[2, 0], mask[2, 0] = 2, True
    rows = model.sample(4, seed=0, fixed=(values, mask))
    assert rows[0, 1] == 3
    assert rows[2, 0] == 2


def test_zero_rows_sample_is_empty():
    assert _flat_model().sample(0).shape == (0, 3)


def test_draw_respects_exclusions_at_low_temperature():
    logits = np.array([[5.0, 1.0, 0.0]])
    assert draw(logits, np.array([0.5]), 1e-9, excluded=[0])[0] == 1


def test_head_entropy_grows_with_temperature():
    model = _flat_model(cards=(5, 4, 6), seed=10)
    rows = model.sample(32, seed=3)
    order = model.canonical_order()
    temperatures = [0.1, 0.5, 1.0, 2.0, 8.0]
    for i in range(model.n_sub_columns):
        logits = model.head_logits(rows, order, i).astype(np.float64)
        entropies = [stats.entropy(tempered_probabilities(logits, t), axis=1) for t in temperatures]
        for colder, warmer in zip(entropies, entropies[1:]):
            assert np.all(colder <= warmer + 1e-12)


@pytest.mark.slow
def test_flat_model_learns_copy_task():
    from src.kernel.optim import AdamState, adam_step

    gen = np.random.default_rng(0)
    a = gen.integers(0, 5, size=2000)
    data = np.stack([a, a], axis=1)
    model = _flat_model(cards=(5, 5), seed=0)
    state = AdamState(lr=1e-2)
    for _ in range(400):
        batch = data[gen.integers(0, len(data), size=64)]
        _, grads = model.loss_and_grads(batch, gen)
        adam_step(model.params, grads, state)
    rows = model.sample(500, seed=1)
    assert np.mean(rows[:, 0] == rows[:, 1]) > 0.9


# ----------------------------------------------------------------------------
# Sequential model
# ----------------------------------------------------------------------------

def _seq_batch(with_context=False):
    gen = np.random.default_rng(4)
    idx = np.stack(
        [gen.integers(0, 3, size=(2, 3)), gen.integers(0, 4, size=(2, 3)), gen.integers(0, 3, size=(2, 3))],
        axis=-1,
    )
    valid = np.array([[True, True, True], [True, True, False]])
    return SequenceBatch(
        idx=idx,
        valid=valid,
        data_mask=valid.copy(),
        lengths=np.array([3, 2]),
        context=np.array([[1], [2]]) if with_context else None,
    )


@pytest.mark.parametrize("with_context", [False, True])
def test_sequential_model_gradients(with_context):
    with float64_mode():
        model = SequentialModel(_small_seq_arch(with_context), seed=1)
        batch = _seq_batch(with_context)
        order = model.canonical_order()

        def loss():
            return model.loss_and_grads(batch, order=order, training=False, with_grads=False)[0]

        _, grads = model.loss_and_grads(batch, order=order, training=False)
        assert set(grads) == set(model.params)
        for name in model.params:
            numeric = numerical_gradient(loss, model.params, name, h=1e-4)
            assert relative_error(grads[name], numeric, floor=1e-6) < 1e-4, name


def test_history_state_only_sees_earlier_steps():
    model = SequentialModel(_small_seq_arch(), seed=2)
    batch = _seq_batch()
    e_all = model.embed_steps(batch.idx)
    hs, _ = model.encode_history(e_all)
    changed = batch.idx.copy()
    changed[:, 1, 0] = (changed[:, 1, 0] + 1) % 3
    hs2, _ = model.encode_history(model.embed_steps(changed))
    np.testing.assert_array_equal(hs[:, :2], hs2[:, :2])
    assert not np.array_equal(hs[:, 2], hs2[:, 2])


def test_order_keeps_length_and_index_first():
    model = SequentialModel(_small_seq_arch(), seed=0)
    assert model.canonical_order().tolist() == [1, 2, 0]
    order = model.draw_order(np.random.default_rng(0))
    assert order[:2].tolist() == [1, 2]


def test_context_rows_are_required():
    model = SequentialModel(_small_seq_arch(with_context=True), seed=0)
    length_spec, index_spec = _count_specs()
    with pytest.raises(ContextSchemaMismatch):
        model.sample_sequences(2, length_spec, index_spec)


def test_sampled_sequences_follow_their_length():
    model = SequentialModel(_small_seq_arch(), seed=3)
    length_spec, index_spec = _count_specs()
    table = model.sample_sequences(40, length_spec, index_spec, seed=7)
    assert table.n_groups == 40
    bounds = table.group_bounds()
    for start, stop in bounds:
        rows = table.data[start:stop]
        n = stop - start
        if n == 0:
            continue
        lengths = decode_numeric(length_spec, rows[:, [1]], np.zeros(n))
        index = decode_numeric(index_spec, rows[:, [2]], np.zeros(n))
        np.testing.assert_array_equal(lengths, np.full(n, float(n)))
        np.testing.assert_array_equal(index, np.arange(1, n + 1, dtype=float))


def test_sequential_sampling_is_seeded():
    model = SequentialModel(_small_seq_arch(), seed=3)
    length_spec, index_spec = _count_specs()
    first = model.sample_sequences(10, length_spec, index_spec, seed=2)
    second = model.sample_sequences(10, length_spec, index_spec, seed=2)
    np.testing.assert_array_equal(first.data, second.data)
    np.testing.assert_array_equal(first.groups, second.groups)


def _sequence(table, s):
    start, stop = table.group_bounds()[s]
    return table.data[start:stop]


def test_sequence_depends_only_on_its_position_and_context_row():
    model = SequentialModel(_small_seq_arch(with_context=True), seed=5)
    length_spec, index_spec = _count_specs()
    context = np.array([[0], [1], [2], [1]])
    others_changed = np.array([[2], [1], [0], [0]])
    first = model.sample_sequences(4, length_spec, index_spec, context=context, seed=6)
    second = model.sample_sequences(4, length_spec, index_spec, context=others_changed, seed=6)
    np.testing.assert_array_equal(_sequence(first, 1), _sequence(second, 1))


def test_permuting_context_permutes_argmax_sequences():
    model = SequentialModel(_small_seq_arch(with_context=True), seed=5)
    length_spec, index_spec = _count_specs()
    context = np.array([[0], [1], [2], [1], [0]])
    perm = np.array([2, 0, 4, 1, 3])
    base = model.sample_sequences(5, length_spec, index_spec, context=context, temperature=1e-7, seed=1)
    moved = model.sample_sequences(5, length_spec, index_spec, context=context[perm], temperature=1e-7, seed=2)
    for s in range(5):
        np.testing.assert_array_equal(_sequence(moved, s), _sequence(base, perm[s]))


def test_sequential_condition_must_target_data():
    model = SequentialModel(_small_seq_arch(), seed=0)
    length_spec, index_spec = _count_specs()
    with pytest.raises(ConditionIndexInvalid):
        model.sample_sequences(2, length_spec, index_spec, conditions={1: 0})


# ----------------------------------------------------------------------------
# Windows and batches
# ----------------------------------------------------------------------------

def test_short_sequences_are_not_windowed():
    assert window_span(3, 5, np.random.default_rng(0)) == (0, 3)


def test_window_covers_every_step_equally():
    gen = np.random.default_rng(0)
    length, window, draws = 10, 4, 20_000
    coverage = np.zeros(length)
    for _ in range(draws):
        start, stop = window_span(length, window, gen)
        assert 1 <= stop - start <= window
        coverage[start:stop] += 1
    expected = draws * window / (length + window - 1)
    assert np.all(np.abs(coverage - expected) < 0.05 * expected)


def test_batch_pads_and_masks():
    table = EncodedTable(
        sub_column_names=["a"],
        cardinalities=[3],
        data=np.array([[1], [2], [0], [1]]),
        groups=np.array([0, 0, 0, 1]),
        placeholder=np.array([False, False, False, True]),
    )
    batch = build_sequence_batch(table, [0, 1])
    assert batch.idx.shape == (2, 3, 1)
    assert batch.valid.tolist() == [[True, True, True], [True, False, False]]
    assert batch.data_mask.tolist() == [[True, True, True], [False, False, False]]
    assert batch.lengths.tolist() == [3, 1]


# ----------------------------------------------------------------------------
# Convergence
# ----------------------------------------------------------------------------

STAY = {"a": 0.8, "b": 0.6}


def _markov_frame(n_sequences: int, seed: int) -> pd.DataFrame:
    """Two-state chain per user, uniform lengths 1..10."""
    gen = np.random.default_rng(seed)
    rows = []
    for g in range(n_sequences):
        state = "a" if gen.random() < 0.5 else "b"
        for _ in range(int(gen.integers(1, 11))):
            rows.append({"user": f"u{g}", "s": state})
            if gen.random() >= STAY[state]:
                state = "b" if state == "a" else "a"
    return pd.DataFrame(rows, dtype=object)


def _transitions(states: np.ndarray, groups: np.ndarray) -> pd.DataFrame:
    same = groups[1:] == groups[:-1]
    table = pd.crosstab(states[:-1][same], states[1:][same], normalize="index")
    return table.reindex(index=["a", "b"], columns=["a", "b"], fill_value=0.0)


def _total_variation(p: pd.Series, q: pd.Series) -> float:
    support = p.index.union(q.index)
    return 0.5 * float(np.abs(p.reindex(support, fill_value=0.0) - q.reindex(support, fill_value=0.0)).sum())


@pytest.mark.slow
def test_sequential_model_recovers_markov_chain():
    raw = _markov_frame(5000, seed=0)
    schema = schema_analyzer.analyze(raw, table_role=TableRole.SEQUENTIAL, group_key="user")
    table = encode_table(raw, schema)
    cfg = TrainConfig(max_epochs=20, batch_size=128, initial_lr=5e-3, seed=0)
    model = build_model(table, schema, cfg)
    trn, val = split(TrainingData(table=table), cfg.val_fraction, cfg.seed)
    fit(model, trn, val, cfg)

    sampled = model.sample_sequences(5000, schema.seq_len_spec, schema.seq_index_spec, seed=1)
    syn = decode(sampled, schema)

    expected = _transitions(raw["s"].to_numpy(), raw["user"].to_numpy())
    observed = _transitions(syn["s"].to_numpy(), sampled.groups)
    for state in ("a", "b"):
        assert 0.5 * np.abs(observed.loc[state] - expected.loc[state]).sum() <= 0.05, state

    trn_lengths = raw.groupby("user").size().value_counts(normalize=True)
    syn_lengths = pd.Series(sampled.group_lengths()).value_counts(normalize=True)
    assert _total_variation(trn_lengths, syn_lengths) <= 0.05
