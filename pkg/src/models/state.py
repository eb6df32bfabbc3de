"""
Pipeline state.

This module defines the state dict that flows through the pipeline stages
(analyze -> train -> generate -> evaluate). Every stage reads the keys it
needs and writes its results back; a CLI command runs a prefix or a single
stage of the pipeline.
"""

from __future__ import annotations

from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, TypedDict

import pandas as pd


class PipelineState(TypedDict, total=False):
    """
    State passed between pipeline stages.

    The state is divided into logical sections:
    - Run Info: identifiers and the engine configuration
    - Inputs: paths and raw tables
    - Analysis: schemas of the target and context tables
    - Training: model store and training report
    - Generation: request, outputs
    - Evaluation: QA report
    - Metrics: per-stage durations
    """

    # ========== Run Info ==========
    run_id: str  # Unique run identifier (run_YYYYMMDD_HHMMSS_ffffff)
    command: str  # CLI command being executed
    start_time: datetime
    engine: Any  # EngineConfig
    termination_reason: Optional[str]

    # ========== Inputs ==========
    data_path: Path  # Target table CSV
    kinds_path: Optional[Path]  # Declared column kinds
    table_role: Any  # TableRole
    group_key: Optional[str]  # Groups the rows of a sequential table
    context_path: Optional[Path]  # Flat context table CSV (two-table models)
    context_kinds_path: Optional[Path]
    context_key: Optional[str]  # Key column of the context table
    raw: pd.DataFrame
    context_raw: Optional[pd.DataFrame]

    # ========== Analysis ==========
    schema_path: Optional[Path]  # Existing schema to use, or where to write it
    schema: Any  # TableSchema
    context_schema_path: Optional[Path]
    context_schema: Any  # Optional[TableSchema]

    # ========== Training ==========
    train_config: Any  # TrainConfig
    model_dir: Path
    stored: Any  # StoredModel, once trained or loaded
    cache_dir: Optional[Path]  # Encoded-table cache
    on_epoch: Optional[Callable[..., None]]  # Per-epoch progress callback
    train_report: Any  # TrainReport of the target model
    context_train_report: Any  # Optional[TrainReport]

    # ========== Generation ==========
    generation: Any  # GenerationRequest
    seed_data_path: Optional[Path]  # Flat seed table for per-row conditioning
    output_path: Path  # Generated CSV (two-table: <stem>_context.csv next to it)
    synthetic: pd.DataFrame
    synthetic_context: Optional[pd.DataFrame]

    # ========== Evaluation ==========
    trn_path: Path
    hold_path: Optional[Path]
    context_hold_path: Optional[Path]  # Context holdout (two-table models)
    syn_path: Path
    report_path: Optional[Path]
    qa_report: Any  # QAReport
    context_qa_report: Any  # Optional[QAReport]

    # ========== Metrics ==========
    stage_durations_ms: Dict[str, float]
    outputs: List[str]  # Files written by the run
