"""Tests for configuration loading, run logging and file helpers."""

import json

import pytest
import yaml

from src.config.settings import DEFAULT_CONFIG_PATH, Settings, load_engine_config
from src.errors import ConfigError, EmptyTable, InputFileError
from src.models.generation import GenerationRequest
from src.models.manifest import DatasetManifest
from src.models.training import EpochRecord
from src.observability.logger import RunLogger, configure_logging, log_stage_execution
from src.utils.helpers import (
    canonical_json,
    format_duration,
    generate_run_id,
    read_csv_table,
    write_csv_table,
)


# ----------------------------------------------------------------------------
# Settings
# ----------------------------------------------------------------------------

def test_default_engine_config_loads():
    config = load_engine_config(DEFAULT_CONFIG_PATH)
    assert config.training.lr_patience <= config.training.early_stop_patience
    assert config.training.initial_lr == pytest.approx(1e-3)
    assert config.metrics.n_groups == 10


def test_unknown_yaml_key_is_rejected(tmp_path):
    path = tmp_path / "engine.yaml"
    path.write_text(yaml.safe_dump({"training": {"max_epochs": 3, "epochs": 3}}))
    with pytest.raises(ConfigError):
        load_engine_config(path)


def test_missing_config_file_raises(tmp_path):
    with pytest.raises(ConfigError):
        load_engine_config(tmp_path / "absent.yaml")


def test_log_level_comes_from_environment(monkeypatch):
    monkeypatch.setenv("LOG_LEVEL", "debug")
    assert Settings().engine().logging.level == "DEBUG"


def test_generation_request_validates_order():
    assert GenerationRequest(order=[2, 0, 1]).order == [2, 0, 1]
    with pytest.raises(ValueError):
        GenerationRequest(order=[0, 0, 1])
    with pytest.raises(ValueError):
        GenerationRequest(temperature=0.0)


def test_manifest_resolves_relative_paths(tmp_path):
    (tmp_path / "data.csv").write_text("a\nx\n")
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"data_csv": "data.csv"}))
    assert DatasetManifest.from_json_file(path).data_csv == tmp_path / "data.csv"


def test_manifest_rejects_context_without_key(tmp_path):
    (tmp_path / "data.csv").write_text("user,a\nu,x\n")
    (tmp_path / "ctx.csv").write_text("user\nu\n")
    with pytest.raises(ValueError):
        DatasetManifest(
            data_csv=tmp_path / "data.csv",
            table_role="sequential",
            group_key="user",
            context_csv=tmp_path / "ctx.csv",
        )


# ----------------------------------------------------------------------------
# Logging
# ----------------------------------------------------------------------------

def _events(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def test_run_logger_writes_jsonl(tmp_path):
    configure_logging("INFO", tmp_path, console=False)
    logger = RunLogger("run_test")
    logger.log("run_start", {"command": "train"})
    logger.log_epoch(EpochRecord(epoch=1, train_loss=1.0, val_loss=0.9, learning_rate=1e-3, improved=True))

    events = _events(tmp_path / "run_test.jsonl")
    assert [e["event"] for e in events] == ["run_start", "epoch"]
    assert all(e["run_id"] == "run_test" for e in events)
    assert events[1]["val_loss"] == 0.9


def test_level_filters_run_file(tmp_path):
    configure_logging("WARNING", tmp_path, console=False)
    logger = RunLogger("run_quiet")
    logger.log_info("hidden")
    logger.log_warning("shown")
    events = _events(tmp_path / "run_quiet.jsonl")
    assert [e["message"] for e in events] == ["shown"]
    assert events[0]["file"] == "test_config.py"


def test_stage_decorator_times_and_reraises(tmp_path, mocker):
    configure_logging("INFO", tmp_path, console=False)
    spy = mocker.spy(RunLogger, "log_error")

    @log_stage_execution
    def ok_stage(state):
        state["seen"] = True
        return state

    @log_stage_execution
    def failing_stage(state):
        raise InputFileError("nope")

    state = ok_stage({"run_id": "run_stage"})
    assert state["seen"]
    assert "ok_stage" in state["stage_durations_ms"]

    with pytest.raises(InputFileError):
        failing_stage({"run_id": "run_stage"})
    assert spy.call_count == 1

    stages = [e.get("stage") for e in _events(tmp_path / "run_stage.jsonl") if e["event"] == "stage_exit"]
    assert stages == ["ok_stage", "failing_stage"]


# ----------------------------------------------------------------------------
# Helpers
# ----------------------------------------------------------------------------

@pytest.mark.parametrize("seconds,expected", [(5.25, "5.2s"), (154, "2m 34s"), (7380, "2h 3m")])
def test_format_duration(seconds, expected):
    assert format_duration(seconds) == expected


def test_run_id_format():
    run_id = generate_run_id()
    assert run_id.startswith("run_")
    assert len(run_id) == len("run_YYYYMMDD_HHMMSS_ffffff")


def test_run_ids_are_unique_within_a_second():
    run_ids = [generate_run_id() for _ in range(200)]
    assert len(set(run_ids)) == 200
    assert run_ids == sorted(run_ids)


def test_canonical_json_is_key_order_independent():
    assert canonical_json({"b": 1, "a": [1, 2]}) == canonical_json({"a": [1, 2], "b": 1})


def test_csv_cells_stay_text(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("a,b\n007,\nNA,x\n")
    df = read_csv_table(path)
    assert df["a"].tolist() == ["007", "NA"]
    assert df["b"].tolist() == ["", "x"]

    write_csv_table(df, tmp_path / "copy.csv")
    assert (tmp_path / "copy.csv").read_text() == "a,b\n007,\nNA,x\n"


def test_csv_errors(tmp_path):
    with pytest.raises(InputFileError):
        read_csv_table(tmp_path / "absent.csv")
    (tmp_path / "empty.csv").write_text("")
    with pytest.raises(EmptyTable):
        read_csv_table(tmp_path / "empty.csv")
