"""Generation stage of the pipeline."""

from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from ...encoding.codec import DecodeRng, decode, encode_conditions, encode_partial, missing_slots
from ...encoding.values import as_text
from ...models.encoded import EncodedTable
from ...models.generation import GenerationDefaults, GenerationRequest
from ...models.state import PipelineState
from ...observability.logger import RunLogger, log_stage_execution
from ...store.model_store import ModelStore, StoredModel
from ...utils.helpers import read_csv_table, write_csv_table


def derived_seed(seed: int, stream: int) -> int:
    """Independent seed for a second sampling pass of the same request."""
    return int(np.random.SeedSequence([seed, stream]).generate_state(1)[0])


def context_output_path(output_path: Path) -> Path:
    output_path = Path(output_path)
    return output_path.with_name(f"{output_path.stem}_context{output_path.suffix or '.csv'}")


def surrogate_keys(n: int) -> list:
    return [str(i) for i in range(n)]


def generate_flat(
    stored: StoredModel,
    request: GenerationRequest,
    defaults: GenerationDefaults,
    seed_data: Optional[pd.DataFrame] = None,
) -> pd.DataFrame:
    """
    Sample and decode a flat table.

    With seed data, one row is generated per seed row; its non-empty cells
    are fixed during sampling and copied verbatim into the output.
    """
    schema = stored.schema
    arch = stored.model.arch
    conditions = encode_conditions(schema, request.conditions)
    excluded = missing_slots(schema, request.impute) if request.impute else None
    fixed = None
    n_rows = request.n_rows
    if seed_data is not None:
        fixed = encode_partial(seed_data, schema)
        n_rows = len(seed_data)

    idx = stored.model.sample(
        n_rows,
        temperature=request.temperature,
        seed=request.seed,
        conditions=conditions,
        fixed=fixed,
        excluded=excluded,
        order=request.order,
        argmax_below=defaults.argmax_below,
        batch_size=defaults.batch_size,
    )
    table = EncodedTable(list(arch.sub_column_names), list(arch.cardinalities), idx)
    out = decode(table, schema, DecodeRng(request.seed))
    if seed_data is not None:
        for column in out.columns:
            if column in seed_data.columns:
                given = as_text(seed_data[column]).reset_index(drop=True)
                keep = given != ""
                out.loc[keep.to_numpy(), column] = given[keep].to_numpy()
    return out


def generate_sequential(
    stored: StoredModel,
    request: GenerationRequest,
    defaults: GenerationDefaults,
) -> Tuple[pd.DataFrame, Optional[pd.DataFrame]]:
    """
    Sample and decode a sequential table, preceded by its context table if the model has one.

    Returns:
        (sequence table, context table or None); both carry regenerated surrogate keys
    """
    schema = stored.schema
    n = request.n_rows
    keys = surrogate_keys(n)

    context_idx = None
    context_df = None
    if stored.context is not None:
        context_model = stored.context
        context_arch = context_model.model.arch
        context_idx = context_model.model.sample(
            n,
            temperature=request.temperature,
            seed=request.seed,
            argmax_below=defaults.argmax_below,
            batch_size=defaults.batch_size,
        )
        context_table = EncodedTable(list(context_arch.sub_column_names), list(context_arch.cardinalities), context_idx)
        context_df = decode(context_table, context_model.schema, DecodeRng(request.seed))
        context_df.insert(0, context_model.schema.context_link, keys)

    seq_seed = derived_seed(request.seed, 1)
    encoded = stored.model.sample_sequences(
        n,
        schema.seq_len_spec,
        schema.seq_index_spec,
        context=context_idx,
        temperature=request.temperature,
        seed=seq_seed,
        conditions=encode_conditions(schema, request.conditions),
        excluded=missing_slots(schema, request.impute) if request.impute else None,
        argmax_below=defaults.argmax_below,
    )
    out = decode(encoded, schema, DecodeRng(seq_seed))
    out.insert(0, schema.group_key, [keys[g] for g in encoded.groups])
    return out, context_df


@log_stage_execution
def generate_tables(state: PipelineState) -> PipelineState:
    """
    Sample synthetic data from a trained model and write it as CSV.

    Two-table models sample the context table first, then one sequence per
    context row, and write `<stem>_context.csv` next to `<stem>.csv`.

    Args:
        state: Pipeline state with model_dir (or a stored model), generation and output_path

    Returns:
        State with the synthetic table(s)
    """
    logger = RunLogger(state["run_id"])
    stored: StoredModel = state.get("stored") or ModelStore(state["model_dir"]).load()
    state["stored"] = stored
    request: GenerationRequest = state["generation"]
    defaults: GenerationDefaults = state["engine"].generation

    if stored.schema.is_sequential:
        synthetic, synthetic_context = generate_sequential(stored, request, defaults)
    else:
        seed_data = read_csv_table(state["seed_data_path"]) if state.get("seed_data_path") else None
        synthetic, synthetic_context = generate_flat(stored, request, defaults, seed_data), None

    output_path = Path(state["output_path"])
    write_csv_table(synthetic, output_path)
    state["outputs"].append(str(output_path))
    if synthetic_context is not None:
        context_path = context_output_path(output_path)
        write_csv_table(synthetic_context, context_path)
        state["outputs"].append(str(context_path))

    state["synthetic"] = synthetic
    state["synthetic_context"] = synthetic_context
    logger.log_info("Generation complete", {
        "rows": len(synthetic),
        "context_rows": len(synthetic_context) if synthetic_context is not None else 0,
        "temperature": request.temperature,
        "seed": request.seed,
    })
    return state
