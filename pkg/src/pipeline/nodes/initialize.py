"""Initialization stage of the pipeline."""

from datetime import datetime, timezone

from ...config.settings import settings
from ...models.state import PipelineState
from ...models.training import TrainConfig
from ...observability.logger import RunLogger, log_stage_execution
from ...utils.helpers import generate_run_id


@log_stage_execution
def initialize_run(state: PipelineState) -> PipelineState:
    """
    Initialize a pipeline run with default values.

    Args:
        state: Initial state (must contain command; may contain run_id and engine)

    Returns:
        State with every run-level default set
    """
    if not state.get("command"):
        raise ValueError("State must contain 'command' field")

    run_id = state.get("run_id") or generate_run_id()
    engine = state.get("engine") or settings.engine()

    defaults = {
        # Run info
        "run_id": run_id,
        "start_time": datetime.now(timezone.utc),
        "engine": engine,
        "termination_reason": None,
        # Inputs
        "kinds_path": None,
        "group_key": None,
        "context_path": None,
        "context_kinds_path": None,
        "context_key": None,
        "context_raw": None,
        "schema_path": None,
        "context_schema_path": None,
        "context_schema": None,
        # Training
        "stored": None,
        "cache_dir": None,
        "on_epoch": None,
        "context_train_report": None,
        # Generation
        "seed_data_path": None,
        "synthetic_context": None,
        # Evaluation
        "hold_path": None,
        "context_hold_path": None,
        "report_path": None,
        "context_qa_report": None,
        # Metrics
        "outputs": [],
    }
    for key, value in defaults.items():
        if key not in state:
            state[key] = value
    if state.get("train_config") is None:
        state["train_config"] = TrainConfig.model_validate(engine.training.model_dump())

    RunLogger(run_id).log_info("Run initialized", {"command": state["command"], "run_id": run_id})
    return state
