"""LangGraph workflow definition for the synthesis pipeline."""

from langgraph.graph import END, StateGraph

from ..models.state import PipelineState
from .edges.routing import (
    COMMAND_STAGES,
    FINISH,
    route_after_analyze,
    route_after_generate,
    route_after_initialize,
    route_after_train,
)
from .nodes.analyze import analyze_tables
from .nodes.evaluate import evaluate_tables
from .nodes.generate import generate_tables
from .nodes.initialize import initialize_run
from .nodes.train import train_models


def create_pipeline_graph() -> StateGraph:
    """
    Create the LangGraph workflow shared by every CLI command.

    The full run executes:
    1. Initialize run - Set up state with defaults
    2. Analyze - Read the tables and derive their schemas
    3. Train - Encode, fit the network(s), write the model store
    4. Generate - Sample and decode synthetic tables
    5. Evaluate - Score them against training and holdout data

    After every stage a conditional edge reads `state["command"]` and either
    moves to the command's next stage or ends the run, so single commands
    run a prefix (analyze, train) or one stage (generate, evaluate).

    Returns:
        Compiled StateGraph
    """
    workflow = StateGraph(PipelineState)

    _add_workflow_nodes(workflow)
    _add_workflow_edges(workflow)

    workflow.set_entry_point("initialize")

    return workflow.compile()


def _add_workflow_nodes(workflow: StateGraph) -> None:
    workflow.add_node("initialize", initialize_run)
    workflow.add_node("analyze", analyze_tables)
    workflow.add_node("train", train_models)
    workflow.add_node("generate", generate_tables)
    workflow.add_node("evaluate", evaluate_tables)


def _add_workflow_edges(workflow: StateGraph) -> None:
    workflow.add_conditional_edges(
        "initialize",
        route_after_initialize,
        {"analyze": "analyze", "generate": "generate", "evaluate": "evaluate"},
    )
    workflow.add_conditional_edges("analyze", route_after_analyze, {"train": "train", FINISH: END})
    workflow.add_conditional_edges("train", route_after_train, {"generate": "generate", FINISH: END})
    workflow.add_conditional_edges("generate", route_after_generate, {"evaluate": "evaluate", FINISH: END})

    # Evaluation always ends the run
    workflow.add_edge("evaluate", END)


# Create the compiled graph
pipeline_graph = create_pipeline_graph()


def create_pipeline(command: str):
    """Return the compiled pipeline after checking that `command` is routable."""
    if command not in COMMAND_STAGES:
        raise ValueError(f"unknown command: {command}")
    return pipeline_graph
