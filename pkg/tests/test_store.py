"""Tests for the on-disk model store."""

import json

import numpy as np
import pytest

from src.argn import FlatModel, SequentialModel
from src.encoding import schema_analyzer
from src.encoding.codec import encode
from src.errors import InputFileError, StoreVersionError
from src.models.architecture import Architecture
from src.models.training import EpochRecord, StopReason, TrainConfig, TrainReport
from src.store import ModelStore, StoredModel, config_digest

from .conftest import correlated_frame


def _report() -> TrainReport:
    return TrainReport(
        epochs=[
            EpochRecord(epoch=1, train_loss=1.2, val_loss=1.1, learning_rate=1e-3, improved=True),
            EpochRecord(epoch=2, train_loss=1.0, val_loss=1.05, learning_rate=1e-3, improved=True),
        ],
        best_epoch=2,
        best_val_loss=1.05,
        stop_reason=StopReason.MAX_EPOCHS,
        wall_time_seconds=4.2,
        n_train=90,
        n_val=10,
    )


@pytest.fixture
def stored_flat():
    df = correlated_frame(100)
    schema = schema_analyzer.analyze(df)
    table = encode(df, schema)
    model = FlatModel(Architecture.flat(table.sub_column_names, table.cardinalities), seed=3)
    return StoredModel(schema=schema, model=model, config=TrainConfig(max_epochs=2), report=_report()), table


def test_flat_round_trip_keeps_logits(tmp_path, stored_flat):
    stored, table = stored_flat
    store = ModelStore(tmp_path / "model")
    store.save(stored)
    assert store.exists()

    loaded = store.load()
    assert isinstance(loaded.model, FlatModel)
    assert loaded.schema == stored.schema
    assert loaded.config == stored.config
    sample_rows = table.data[:8]
    for before, after in zip(stored.model.reference_logits(sample_rows), loaded.model.reference_logits(sample_rows)):
        np.testing.assert_array_equal(before, after)


def test_report_is_stored_without_wall_time(tmp_path, stored_flat):
    stored, _ = stored_flat
    store = ModelStore(tmp_path / "model")
    store.save(stored)
    loaded = store.load()
    assert loaded.report.best_epoch == 2
    assert loaded.report.wall_time_seconds == 0.0
    assert "wall_time_seconds" not in json.loads((tmp_path / "model" / "train_report.json").read_text())
    assert (tmp_path / "model" / "train_log.txt").read_text().startswith("epoch")


def test_saving_twice_is_byte_identical(tmp_path, stored_flat):
    stored, _ = stored_flat
    ModelStore(tmp_path / "one").save(stored)
    ModelStore(tmp_path / "two").save(stored)
    for name in ("model.json", "schema.json", "weights.bin", "train_report.json"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()


def test_saving_over_an_existing_store_replaces_it(tmp_path, stored_flat):
    stored, _ = stored_flat
    store = ModelStore(tmp_path / "model")
    store.save(stored)
    stored.report = None
    store.save(stored)
    assert not (tmp_path / "model" / "train_report.json").exists()
    assert store.load().report is None


def test_model_json_records_config_digest(tmp_path, stored_flat):
    stored, _ = stored_flat
    ModelStore(tmp_path / "model").save(stored)
    model_json = json.loads((tmp_path / "model" / "model.json").read_text())
    assert model_json["config_digest"] == config_digest(stored.config)
    assert config_digest(TrainConfig(max_epochs=3)) != config_digest(stored.config)


def test_major_version_mismatch_raises(tmp_path, stored_flat):
    stored, _ = stored_flat
    ModelStore(tmp_path / "model").save(stored)
    path = tmp_path / "model" / "model.json"
    model_json = json.loads(path.read_text())
    model_json["format_version"] = "2.0"
    path.write_text(json.dumps(model_json))
    with pytest.raises(StoreVersionError):
        ModelStore(tmp_path / "model").load()


def test_minor_version_bump_still_loads(tmp_path, stored_flat):
    stored, _ = stored_flat
    ModelStore(tmp_path / "model").save(stored)
    path = tmp_path / "model" / "model.json"
    model_json = json.loads(path.read_text())
    model_json["format_version"] = "1.7"
    path.write_text(json.dumps(model_json))
    assert isinstance(ModelStore(tmp_path / "model").load().model, FlatModel)


def test_missing_store_raises(tmp_path):
    with pytest.raises(InputFileError):
        ModelStore(tmp_path / "nowhere").load()


def test_two_table_store_nests_the_context_model(tmp_path, stored_flat):
    context, _ = stored_flat
    arch = Architecture.sequential(
        ["state"],
        [3],
        0,
        0,
        median_length=2.0,
        context_names=context.model.arch.sub_column_names,
        context_cardinalities=context.model.arch.cardinalities,
    )
    seq = SequentialModel(arch, seed=1, max_seq_window=4)
    stored = StoredModel(schema=context.schema, model=seq, config=TrainConfig(max_seq_window=4), context=context)

    ModelStore(tmp_path / "model").save(stored)
    assert (tmp_path / "model" / "context" / "model.json").is_file()

    loaded = ModelStore(tmp_path / "model").load()
    assert isinstance(loaded.model, SequentialModel)
    assert isinstance(loaded.context.model, FlatModel)
    assert loaded.model.arch == seq.arch
    for name, value in seq.params.items():
        np.testing.assert_array_equal(loaded.model.params[name], value)
