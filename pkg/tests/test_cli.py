"""End-to-end tests of the command-line interface."""

import json

import pandas as pd
import pytest

from src.main import main
from src.pipeline.edges.routing import COMMAND_STAGES, FINISH, next_stage
from src.pipeline.graph import create_pipeline

from .conftest import correlated_frame, sequence_frame, write_csv


@pytest.fixture
def cli(tmp_path):
    """Run the CLI with logs in a temp directory and no console rendering."""

    def run(*args):
        return main(["--log-dir", str(tmp_path / "logs"), "--quiet", *[str(a) for a in args]])

    return run


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "train.json"
    path.write_text(json.dumps({"max_epochs": 2, "batch_size": 64}))
    return path


@pytest.fixture
def trained(cli, flat_csv, small_config, tmp_path):
    model_dir = tmp_path / "model"
    assert cli("train", "--data", flat_csv, "--config", small_config, "-o", model_dir) == 0
    return model_dir


def _read(path):
    return pd.read_csv(path, dtype=str, keep_default_na=False)


def test_missing_input_exits_with_input_code(cli, tmp_path):
    assert cli("analyze", tmp_path / "absent.csv", "-o", tmp_path / "schema.json") == 2


def test_analyze_is_deterministic(cli, flat_csv, tmp_path):
    assert cli("analyze", flat_csv, "-o", tmp_path / "one.json") == 0
    assert cli("analyze", flat_csv, "-o", tmp_path / "two.json") == 0
    assert (tmp_path / "one.json").read_bytes() == (tmp_path / "two.json").read_bytes()


def test_bad_train_config_exits_with_input_code(cli, flat_csv, tmp_path):
    config = tmp_path / "bad.json"
    config.write_text(json.dumps({"max_epochs": 2, "learning_rate": 0.1}))
    assert cli("train", "--data", flat_csv, "--config", config, "-o", tmp_path / "model") == 2


def test_train_writes_a_model_store(trained):
    assert (trained / "model.json").is_file()
    assert (trained / "weights.bin").is_file()
    report = json.loads((trained / "train_report.json").read_text())
    assert len(report["epochs"]) == 2


def test_generate_zero_rows_writes_header_only(cli, trained, tmp_path):
    out = tmp_path / "syn.csv"
    assert cli("generate", "--model", trained, "-n", 0, "-o", out) == 0
    assert out.read_text().strip() == "a,b,amount"


def test_generate_writes_requested_rows(cli, trained, tmp_path):
    out = tmp_path / "syn.csv"
    assert cli("generate", "--model", trained, "-n", 20, "--seed", 4, "-o", out) == 0
    syn = _read(out)
    assert list(syn.columns) == ["a", "b", "amount"]
    assert len(syn) == 20


def test_generate_is_seeded(cli, trained, tmp_path):
    for name in ("one.csv", "two.csv"):
        assert cli("generate", "--model", trained, "-n", 30, "--seed", 9, "-o", tmp_path / name) == 0
    assert (tmp_path / "one.csv").read_bytes() == (tmp_path / "two.csv").read_bytes()


def test_generate_with_conditions(cli, trained, tmp_path):
    conditions = tmp_path / "conditions.json"
    conditions.write_text(json.dumps({"a": "y"}))
    out = tmp_path / "syn.csv"
    assert cli("generate", "--model", trained, "-n", 15, "--conditions", conditions, "-o", out) == 0
    assert set(_read(out)["a"]) == {"y"}


def test_unknown_condition_value_exits_with_generation_code(cli, trained, tmp_path):
    conditions = tmp_path / "conditions.json"
    conditions.write_text(json.dumps({"a": "nowhere"}))
    assert cli("generate", "--model", trained, "-n", 5, "--conditions", conditions, "-o", tmp_path / "s.csv") == 5


def test_seed_data_cells_are_kept(cli, trained, tmp_path):
    seed = write_csv(pd.DataFrame({"a": ["z", "", "x"], "b": ["", "q", ""], "amount": ["", "", ""]}), tmp_path / "seed.csv")
    out = tmp_path / "syn.csv"
    assert cli("generate", "--model", trained, "--seed-data", seed, "-o", out) == 0
    syn = _read(out)
    assert len(syn) == 3
    assert syn.loc[0, "a"] == "z" and syn.loc[2, "a"] == "x"
    assert syn.loc[1, "b"] == "q"


def test_seed_label_unknown_to_the_model_is_kept(cli, trained, tmp_path):
    seed = write_csv(pd.DataFrame({"a": ["w", "x"], "b": ["", ""], "amount": ["", ""]}), tmp_path / "seed.csv")
    out = tmp_path / "syn.csv"
    assert cli("generate", "--model", trained, "--seed-data", seed, "-o", out) == 0
    assert _read(out)["a"].tolist() == ["w", "x"]


def test_evaluate_writes_report_and_summary(cli, flat_csv, tmp_path):
    schema = tmp_path / "schema.json"
    hold = write_csv(correlated_frame(100, seed=1), tmp_path / "hold.csv")
    syn = write_csv(correlated_frame(200, seed=2), tmp_path / "syn.csv")
    assert cli("analyze", flat_csv, "-o", schema) == 0

    report_path = tmp_path / "report.json"
    assert cli("evaluate", "--schema", schema, "--trn", flat_csv, "--hold", hold, "--syn", syn, "-o", report_path) == 0
    report = json.loads(report_path.read_text())
    assert 0.0 <= report["acc_overall"] <= 1.0
    assert 0.0 <= report["dcr_share"] <= 1.0
    assert (tmp_path / "report.txt").is_file()


def _run_config(tmp_path, flat_csv, output_name):
    hold = write_csv(correlated_frame(80, seed=3), tmp_path / "hold.csv")
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({"data_csv": flat_csv.name, "holdout_csv": hold.name}))
    run_config = tmp_path / f"{output_name}.json"
    run_config.write_text(json.dumps({
        "manifest": str(manifest),
        "training": {"max_epochs": 2, "batch_size": 64},
        "generation": {"n_rows": 50, "seed": 1},
        "output_dir": str(tmp_path / output_name),
    }))
    return run_config


def test_run_executes_every_stage(cli, flat_csv, tmp_path):
    assert cli("run", "--config", _run_config(tmp_path, flat_csv, "out")) == 0
    out = tmp_path / "out"
    for name in ("schema.json", "model/model.json", "synthetic.csv", "report.json", "report.txt"):
        assert (out / name).is_file(), name
    assert len(_read(out / "synthetic.csv")) == 50


def test_run_is_reproducible_byte_for_byte(cli, flat_csv, tmp_path):
    for name in ("first", "second"):
        assert cli("run", "--config", _run_config(tmp_path, flat_csv, name)) == 0
    written = [
        "schema.json",
        "model/schema.json",
        "model/model.json",
        "model/weights.bin",
        "model/train_report.json",
        "model/train_log.txt",
        "synthetic.csv",
        "report.json",
        "report.txt",
    ]
    for name in written:
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes(), name


def test_two_table_train_and_generate(cli, tmp_path):
    events = sequence_frame(40, seed=5)
    users = pd.DataFrame({"user": [f"u{g}" for g in range(40)], "tier": ["gold", "basic"] * 20})
    data = write_csv(events, tmp_path / "events.csv")
    context = write_csv(users, tmp_path / "users.csv")
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({
        "data_csv": data.name,
        "table_role": "sequential",
        "group_key": "user",
        "context_csv": context.name,
        "context_key": "user",
    }))
    config = tmp_path / "train.json"
    config.write_text(json.dumps({"max_epochs": 1, "batch_size": 16, "max_seq_window": 4}))

    model_dir = tmp_path / "model"
    assert cli("train", "--manifest", manifest, "--config", config, "-o", model_dir) == 0
    assert (model_dir / "context" / "model.json").is_file()

    out = tmp_path / "syn.csv"
    assert cli("generate", "--model", model_dir, "-n", 12, "-o", out) == 0
    syn_context = _read(tmp_path / "syn_context.csv")
    syn_events = _read(out)
    assert len(syn_context) == 12
    assert set(syn_events["user"]) <= set(syn_context["user"])


@pytest.mark.parametrize("command", sorted(COMMAND_STAGES))
def test_routing_follows_command_stages(command):
    state = {"command": command, "run_id": "run_routing"}
    visited = ["initialize"]
    while (target := next_stage(state, visited[-1])) != FINISH:
        visited.append(target)
    assert visited == COMMAND_STAGES[command]


def test_graph_holds_every_stage():
    nodes = set(create_pipeline("run").get_graph().nodes)
    assert {"initialize", "analyze", "train", "generate", "evaluate"} <= nodes
    with pytest.raises(ValueError):
        create_pipeline("publish")
    with pytest.raises(ValueError):
        next_stage({"command": "publish"}, "initialize")


def test_analyze_command_stops_after_analysis(flat_csv, tmp_path):
    args = ["--log-dir", tmp_path / "logs", "--log-level", "INFO", "--quiet", "analyze", flat_csv, "-o", tmp_path / "schema.json"]
    assert main([str(a) for a in args]) == 0
    (log,) = (tmp_path / "logs").glob("*.jsonl")
    events = [json.loads(line) for line in log.read_text().splitlines()]
    stages = [e["stage"] for e in events if e["event"] == "stage_exit"]
    assert stages == ["initialize_run", "analyze_tables"]
