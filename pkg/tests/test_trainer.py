"""Tests for the split, the patience routing and the training loop."""

import math

import numpy as np
import pytest

from src.argn import FlatModel, SequentialModel
from src.errors import NonFiniteLoss, TooFewRows
from src.models.architecture import Architecture
from src.models.encoded import EncodedTable, TrainingData
from src.models.training import StopReason, TrainConfig
from src.training.routing import PatienceState, apply_lr_halving, record_epoch, should_continue_training
from src.training.trainer import fit, split


class ScriptedModel:
    """Stand-in network: constant gradient of one, validation losses read from a script."""

    def __init__(self, val_losses, train_loss=1.0):
        self.params = {"w": np.zeros(1)}
        self.val_losses = list(val_losses)
        self.train_loss = train_loss
        self.calls = 0

    def iter_batches(self, data, batch_size, rng):
        yield data.table.data

    def loss_and_grads(self, batch, rng=None):
        return self.train_loss, {"w": np.ones(1)}

    def evaluate(self, data, batch_size=256):
        loss = self.val_losses[self.calls]
        self.calls += 1
        return loss


def _flat_data(n_rows):
    return TrainingData(
        table=EncodedTable(sub_column_names=["a"], cardinalities=[4], data=np.arange(n_rows) % 4)
    )


def _sequence_data(lengths):
    groups = np.repeat(np.arange(len(lengths)), lengths)
    return TrainingData(
        table=EncodedTable(
            sub_column_names=["a"],
            cardinalities=[3],
            data=np.zeros(len(groups), dtype=np.int64),
            groups=groups,
            group_keys=[f"g{i}" for i in range(len(lengths))],
        )
    )


# ----------------------------------------------------------------------------
# Split
# ----------------------------------------------------------------------------

def test_split_sizes():
    train, val = split(_flat_data(25), 0.1, seed=0)
    assert val.n_units == 3
    assert train.n_units == 22


def test_split_keeps_at_least_one_validation_row():
    _, val = split(_flat_data(10), 0.01, seed=0)
    assert val.n_units == 1


def test_split_is_seeded():
    first = split(_flat_data(40), 0.2, seed=5)[1].table.data
    second = split(_flat_data(40), 0.2, seed=5)[1].table.data
    np.testing.assert_array_equal(first, second)


def test_split_needs_ten_units():
    with pytest.raises(TooFewRows):
        split(_flat_data(9), 0.1, seed=0)


def test_split_keeps_sequences_whole():
    data = _sequence_data([1, 2, 3, 4, 5, 1, 2, 3, 4, 5, 6, 7])
    train, val = split(data, 0.25, seed=1)
    assert train.n_units + val.n_units == 12
    assert train.table.n_rows + val.table.n_rows == data.table.n_rows
    lengths = sorted(train.table.group_lengths().tolist() + val.table.group_lengths().tolist())
    assert lengths == sorted([1, 2, 3, 4, 5, 1, 2, 3, 4, 5, 6, 7])


# ----------------------------------------------------------------------------
# Routing
# ----------------------------------------------------------------------------

def test_record_epoch_separates_best_from_improvement():
    state = PatienceState()
    assert record_epoch(state, 1, 1.0, tol=0.1) == (True, True)
    assert record_epoch(state, 2, 0.95, tol=0.1) == (True, False)
    assert state.best_epoch == 2
    assert state.epochs_since_improvement == 1


def test_routing_decision_order():
    cfg = TrainConfig(lr_patience=2, early_stop_patience=2, max_epochs=3)
    state = PatienceState(epochs_since_improvement=2, epochs_since_lr_change=2)
    assert should_continue_training(state, cfg, epoch=3) == "stop"
    state = PatienceState(epochs_since_improvement=1, epochs_since_lr_change=2)
    assert should_continue_training(state, cfg, epoch=3) == "max_epochs"
    assert should_continue_training(state, cfg, epoch=2) == "halve_lr"
    state = PatienceState()
    assert should_continue_training(state, cfg, epoch=1) == "continue"


def test_halving_resets_stop_counter_only_when_configured():
    state = PatienceState(epochs_since_improvement=3, epochs_since_lr_change=3)
    apply_lr_halving(state, TrainConfig())
    assert (state.epochs_since_improvement, state.epochs_since_lr_change) == (3, 0)
    apply_lr_halving(state, TrainConfig(reset_stop_patience_on_halving=True))
    assert state.epochs_since_improvement == 0


def test_lr_patience_cannot_exceed_stop_patience():
    with pytest.raises(ValueError):
        TrainConfig(lr_patience=6, early_stop_patience=5)


# ----------------------------------------------------------------------------
# Training loop
# ----------------------------------------------------------------------------

def test_fit_halves_then_stops_and_restores_best():
    cfg = TrainConfig(lr_patience=2, early_stop_patience=4, max_epochs=20, initial_lr=0.1)
    model = ScriptedModel([1.0, 0.9, 0.95, 0.95, 0.95, 0.95, 0.95])
    params, report = fit(model, _flat_data(20), _flat_data(10), cfg)

    assert len(report.epochs) == 6
    assert report.stop_reason == StopReason.EARLY_STOPPING
    assert report.best_epoch == 2
    assert report.best_val_loss == pytest.approx(0.9)
    assert [e.lr_halved for e in report.epochs] == [False, False, False, True, False, False]
    assert report.epochs[3].learning_rate == pytest.approx(0.1)
    assert report.epochs[4].learning_rate == pytest.approx(0.05)
    # two Adam steps with a unit gradient move w by about 2 * lr
    assert params["w"][0] == pytest.approx(-0.2, rel=1e-6)
    assert model.params is params


def test_fit_stops_at_max_epochs():
    cfg = TrainConfig(max_epochs=3)
    model = ScriptedModel([3.0, 2.0, 1.0])
    _, report = fit(model, _flat_data(20), _flat_data(10), cfg)
    assert report.stop_reason == StopReason.MAX_EPOCHS
    assert report.best_epoch == 3


def test_fit_reports_every_epoch_to_callback():
    seen = []
    cfg = TrainConfig(max_epochs=2)
    fit(ScriptedModel([1.0, 0.5]), _flat_data(20), _flat_data(10), cfg, on_epoch=seen.append)
    assert [r.epoch for r in seen] == [1, 2]


def test_non_finite_training_loss_aborts_with_report():
    model = ScriptedModel([1.0], train_loss=math.nan)
    with pytest.raises(NonFiniteLoss) as excinfo:
        fit(model, _flat_data(20), _flat_data(10), TrainConfig())
    assert excinfo.value.report.stop_reason == StopReason.NON_FINITE_LOSS
    assert excinfo.value.report.epochs == []


def test_non_finite_validation_loss_aborts():
    model = ScriptedModel([1.0, math.inf])
    with pytest.raises(NonFiniteLoss) as excinfo:
        fit(model, _flat_data(20), _flat_data(10), TrainConfig(max_epochs=5))
    assert excinfo.value.report.best_epoch == 1


def test_fit_trains_a_real_flat_model():
    data = _flat_data(60)
    model = FlatModel(Architecture.flat(["a"], [4]), seed=0)
    train, val = split(data, 0.2, seed=0)
    _, report = fit(model, train, val, TrainConfig(max_epochs=3, batch_size=16))
    assert len(report.epochs) == 3
    assert report.best_val_loss == min(report.val_losses)
    assert report.n_train == 48 and report.n_val == 12


def test_fit_trains_a_real_sequential_model():
    data = _sequence_data([1, 2, 3] * 5)
    arch = Architecture.sequential(["a"], [3], 0, 0, median_length=2.0)
    model = SequentialModel(arch, seed=0, max_seq_window=2)
    train, val = split(data, 0.2, seed=0)
    _, report = fit(model, train, val, TrainConfig(max_epochs=2, batch_size=4))
    assert len(report.epochs) == 2
    assert all(math.isfinite(e.train_loss) for e in report.epochs)
