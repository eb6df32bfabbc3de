"""Exports for all schema, training, generation and report models."""

from .architecture import Architecture, ModelKind
from .encoded import EncodedTable, SequenceBatch, TrainingData
from .generation import GenerationDefaults, GenerationRequest
from .manifest import DatasetManifest, RunConfig
from .report import AccuracyScores, MetricsOptions, QAReport
from .schema import (
    MISSING_TOKEN,
    PAD_TOKEN,
    RARE_TOKEN,
    AnalysisOptions,
    ColumnKind,
    EncodingSpec,
    EncodingStrategy,
    SubColumn,
    TableRole,
    TableSchema,
)
from .training import EpochRecord, StopReason, TrainConfig, TrainReport

__all__ = [
    "Architecture",
    "ModelKind",
    "EncodedTable",
    "SequenceBatch",
    "TrainingData",
    "GenerationDefaults",
    "GenerationRequest",
    "DatasetManifest",
    "RunConfig",
    "AccuracyScores",
    "MetricsOptions",
    "QAReport",
    "MISSING_TOKEN",
    "PAD_TOKEN",
    "RARE_TOKEN",
    "AnalysisOptions",
    "ColumnKind",
    "EncodingSpec",
    "EncodingStrategy",
    "SubColumn",
    "TableRole",
    "TableSchema",
    "EpochRecord",
    "StopReason",
    "TrainConfig",
    "TrainReport",
]
