"""Training stage of the pipeline."""

from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ...argn.flat_model import FlatModel
from ...argn.seq_model import SequentialModel
from ...encoding.codec import augment_sequences, encode
from ...encoding.values import as_text
from ...errors import SchemaMismatch
from ...models.architecture import Architecture
from ...models.encoded import EncodedTable, TrainingData
from ...models.schema import TableSchema
from ...models.state import PipelineState
from ...models.training import TrainConfig, TrainReport
from ...observability.logger import RunLogger, log_stage_execution
from ...store.model_store import ModelStore, StoredModel
from ...training.trainer import Model, fit, split
from ...utils.helpers import canonical_json, sha256_digest


def cache_key(raw: pd.DataFrame, schema: TableSchema, context_keys: Optional[Sequence[str]] = None) -> str:
    """Digest of everything an encoding depends on: the schema, the cells and the context keys."""
    payload = canonical_json(
        {
            "schema": schema.model_dump(mode="json"),
            "context_keys": list(context_keys) if context_keys is not None else None,
            "data": sha256_digest(raw.to_csv(index=False, lineterminator="\n")),
        }
    )
    return sha256_digest(payload)


def encode_table(
    raw: pd.DataFrame,
    schema: TableSchema,
    context_keys: Optional[Sequence[str]] = None,
    cache_dir: Optional[Path] = None,
    logger: Optional[RunLogger] = None,
) -> EncodedTable:
    """Encode (and, for sequential tables, augment) a raw table, reusing a cached encoding if present."""
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / f"{cache_key(raw, schema, context_keys)}.enc"
        if path.is_file():
            if logger is not None:
                logger.log_info("Encoded table loaded from cache", {"path": str(path)})
            return EncodedTable.load(path)

    table = encode(raw, schema, context_keys)
    if schema.is_sequential:
        table = augment_sequences(table, schema)

    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        table.save(path)
        if logger is not None:
            logger.log_info("Encoded table cached", {"path": str(path)})
    return table


def context_keys_of(context_raw: pd.DataFrame, context_schema: TableSchema) -> List[str]:
    key = context_schema.context_link
    if not key or key not in context_raw.columns:
        raise SchemaMismatch(f"context table has no key column {key!r}")
    keys = as_text(context_raw[key]).tolist()
    if len(set(keys)) != len(keys):
        raise SchemaMismatch(f"context key {key!r} is not unique")
    return keys


def median_positive_length(table: EncodedTable) -> float:
    lengths = table.group_lengths()
    positive = lengths[lengths > 0]
    return float(np.median(positive)) if positive.size else 1.0


def build_model(
    table: EncodedTable,
    schema: TableSchema,
    cfg: TrainConfig,
    context: Optional[EncodedTable] = None,
) -> Model:
    """Size a fresh network for an encoded table."""
    if not schema.is_sequential:
        arch = Architecture.flat(
            table.sub_column_names, table.cardinalities, regressor_depth=cfg.regressor_depth, dropout=cfg.dropout
        )
        return FlatModel(arch, seed=cfg.seed)

    arch = Architecture.sequential(
        table.sub_column_names,
        table.cardinalities,
        n_length_columns=schema.seq_len_spec.width,
        n_index_columns=schema.seq_index_spec.width,
        median_length=median_positive_length(table),
        context_names=context.sub_column_names if context is not None else None,
        context_cardinalities=context.cardinalities if context is not None else None,
        regressor_depth=cfg.regressor_depth,
        dropout=cfg.dropout,
    )
    return SequentialModel(arch, seed=cfg.seed, max_seq_window=cfg.max_seq_window)


def train_one(
    data: TrainingData,
    schema: TableSchema,
    cfg: TrainConfig,
    logger: RunLogger,
    on_epoch=None,
) -> Tuple[Model, TrainReport]:
    model = build_model(data.table, schema, cfg, data.context)
    trn, val = split(data, cfg.val_fraction, cfg.seed)
    logger.log_info("Training started", {
        "kind": model.arch.kind.value,
        "sub_columns": model.arch.n_sub_columns,
        "train_units": trn.n_units,
        "val_units": val.n_units,
    })
    _, report = fit(model, trn, val, cfg, run_logger=logger, on_epoch=on_epoch)
    return model, report


@log_stage_execution
def train_models(state: PipelineState) -> PipelineState:
    """
    Encode the tables, fit the network(s) and write the model store.

    For two-table datasets the flat context model is trained first; the
    sequential model then learns conditioned on the encoded context row of
    each sequence.

    Args:
        state: Pipeline state with raw tables and schemas

    Returns:
        State with the stored model and its training report(s)
    """
    logger = RunLogger(state["run_id"])
    cfg: TrainConfig = state["train_config"]
    schema: TableSchema = state["schema"]
    cache_dir = state.get("cache_dir")

    context_stored = None
    context_table = None
    context_keys = None
    if state.get("context_raw") is not None:
        if not schema.is_sequential:
            raise SchemaMismatch("a context table requires a sequential target table")
        context_schema: TableSchema = state["context_schema"]
        context_keys = context_keys_of(state["context_raw"], context_schema)
        context_table = encode_table(state["context_raw"], context_schema, cache_dir=cache_dir, logger=logger)
        logger.log_info("Training context model", {"rows": context_table.n_rows})
        context_model, context_report = train_one(
            TrainingData(context_table), context_schema, cfg, logger, state.get("on_epoch")
        )
        context_stored = StoredModel(context_schema, context_model, cfg, context_report)
        state["context_train_report"] = context_report

    table = encode_table(state["raw"], schema, context_keys, cache_dir=cache_dir, logger=logger)
    model, report = train_one(TrainingData(table, context=context_table), schema, cfg, logger, state.get("on_epoch"))

    stored = StoredModel(schema, model, cfg, report, context=context_stored)
    ModelStore(state["model_dir"]).save(stored)
    state["stored"] = stored
    state["train_report"] = report
    state["termination_reason"] = report.stop_reason.value if report.stop_reason else None
    state["outputs"].append(str(state["model_dir"]))
    return state
