"""Routing logic for the pipeline's conditional edges."""

from typing import Dict, List

from ...models.state import PipelineState
from ...observability.logger import RunLogger

FINISH = "finish"

COMMAND_STAGES: Dict[str, List[str]] = {
    "analyze": ["initialize", "analyze"],
    "train": ["initialize", "analyze", "train"],
    "generate": ["initialize", "generate"],
    "evaluate": ["initialize", "evaluate"],
    "run": ["initialize", "analyze", "train", "generate", "evaluate"],
}


def next_stage(state: PipelineState, current: str) -> str:
    """
    Pick the stage that follows `current` for the state's command.

    Returns:
        Next node name, or FINISH when `current` is the command's last stage
    """
    command = state.get("command", "")
    if command not in COMMAND_STAGES:
        raise ValueError(f"unknown command: {command}")
    stages = COMMAND_STAGES[command]
    position = stages.index(current) + 1
    target = stages[position] if position < len(stages) else FINISH
    RunLogger(state.get("run_id", "unknown")).log_info(
        "Routing decision", {"command": command, "from": current, "to": target}
    )
    return target


def route_after_initialize(state: PipelineState) -> str:
    """analyze (analyze/train/run), generate, or evaluate."""
    return next_stage(state, "initialize")


def route_after_analyze(state: PipelineState) -> str:
    """train for train/run, FINISH for analyze."""
    return next_stage(state, "analyze")


def route_after_train(state: PipelineState) -> str:
    """generate for run, FINISH for train."""
    return next_stage(state, "train")


def route_after_generate(state: PipelineState) -> str:
    """evaluate for run, FINISH for generate."""
    return next_stage(state, "generate")
