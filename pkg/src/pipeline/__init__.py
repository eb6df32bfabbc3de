"""Pipeline stages and the LangGraph workflow connecting them."""

from .edges.routing import COMMAND_STAGES
from .graph import create_pipeline, create_pipeline_graph, pipeline_graph

__all__ = ["COMMAND_STAGES", "create_pipeline", "create_pipeline_graph", "pipeline_graph"]
