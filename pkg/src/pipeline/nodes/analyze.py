"""Schema analysis stage of the pipeline."""

from pathlib import Path
from typing import Dict, Optional, Tuple

import pandas as pd
from pydantic import ValidationError

from ...encoding.schema_analyzer import analyze, parse_kinds
from ...errors import ConfigError
from ...models.schema import AnalysisOptions, ColumnKind, TableRole, TableSchema
from ...models.state import PipelineState
from ...observability.logger import RunLogger, log_stage_execution
from ...utils.helpers import canonical_json, read_csv_table, read_json_file, write_text_atomic


def load_schema(path: Path) -> TableSchema:
    """Read a schema.json; validation errors become ConfigError."""
    try:
        return TableSchema.model_validate(read_json_file(path))
    except ValidationError as e:
        raise ConfigError(f"Invalid schema in {path}: {e}") from e


def save_schema(schema: TableSchema, path: Path) -> None:
    write_text_atomic(Path(path), canonical_json(schema.model_dump(mode="json")))


def declared_kinds(
    kinds_path: Optional[Path], opts: AnalysisOptions
) -> Tuple[Dict[str, ColumnKind], AnalysisOptions]:
    """Declared kinds of a kinds.json plus the options extended by its geo pairs and overrides."""
    if kinds_path is None:
        return {}, opts
    kinds, geo, overrides = parse_kinds(read_json_file(kinds_path))
    opts = opts.model_copy(
        update={
            "geo_columns": {**opts.geo_columns, **geo},
            "numeric_overrides": {**opts.numeric_overrides, **overrides},
        }
    )
    return kinds, opts


def _analyze_table(
    raw: pd.DataFrame,
    kinds_path: Optional[Path],
    opts: AnalysisOptions,
    table_role: TableRole,
    group_key: Optional[str] = None,
    context_link: Optional[str] = None,
) -> TableSchema:
    kinds, opts = declared_kinds(kinds_path, opts)
    return analyze(raw, kinds, opts, table_role=table_role, group_key=group_key, context_link=context_link)


@log_stage_execution
def analyze_tables(state: PipelineState) -> PipelineState:
    """
    Read the input tables and derive their schemas.

    This stage:
    1. Reads the target table (and the context table of two-table datasets)
    2. Keeps schemas already present in the state (e.g. from --schema)
    3. Analyzes every table without a schema
    4. Writes newly derived schemas to schema_path / context_schema_path

    Args:
        state: Current pipeline state

    Returns:
        State with raw tables and schemas
    """
    logger = RunLogger(state["run_id"])
    opts = state["engine"].analysis
    table_role = state.get("table_role") or TableRole.FLAT

    if state.get("raw") is None:
        state["raw"] = read_csv_table(state["data_path"])
    if state.get("context_path") is not None and state.get("context_raw") is None:
        state["context_raw"] = read_csv_table(state["context_path"])

    if state.get("schema") is None:
        schema = _analyze_table(
            state["raw"], state.get("kinds_path"), opts, table_role, group_key=state.get("group_key")
        )
        state["schema"] = schema
        if state.get("schema_path") is not None:
            save_schema(schema, state["schema_path"])
            state["outputs"].append(str(state["schema_path"]))

    if state.get("context_raw") is not None and state.get("context_schema") is None:
        context_schema = _analyze_table(
            state["context_raw"],
            state.get("context_kinds_path"),
            opts,
            TableRole.FLAT,
            context_link=state.get("context_key"),
        )
        state["context_schema"] = context_schema
        if state.get("context_schema_path") is not None:
            save_schema(context_schema, state["context_schema_path"])
            state["outputs"].append(str(state["context_schema_path"]))

    logger.log_info("Analysis complete", {
        "rows": len(state["raw"]),
        "columns": len(state["schema"].specs),
        "sequential": state["schema"].is_sequential,
        "context_rows": len(state["context_raw"]) if state.get("context_raw") is not None else 0,
    })
    return state
