"""Pipeline stages; each takes and returns the pipeline state."""

from .analyze import analyze_tables
from .evaluate import evaluate_tables
from .generate import generate_tables
from .initialize import initialize_run
from .train import train_models

__all__ = ["analyze_tables", "evaluate_tables", "generate_tables", "initialize_run", "train_models"]
