"""Evaluation stage of the pipeline."""

from pathlib import Path
from typing import Optional

import pandas as pd

from ...models.report import MetricsOptions, QAReport
from ...models.schema import TableSchema
from ...models.state import PipelineState
from ...observability.logger import RunLogger, log_stage_execution
from ...qa.report import evaluate
from ...utils.helpers import canonical_json, read_csv_table, write_text_atomic


def save_report(report: QAReport, path: Path) -> Path:
    """Write report.json and the plain-text summary next to it; returns the summary path."""
    path = Path(path)
    write_text_atomic(path, canonical_json(report.model_dump(mode="json")))
    summary = path.with_suffix(".txt")
    write_text_atomic(summary, report.summary_text())
    return summary


def _table(state: PipelineState, frame_key: str, path_key: str) -> Optional[pd.DataFrame]:
    if state.get(frame_key) is not None:
        return state[frame_key]
    if state.get(path_key) is not None:
        return read_csv_table(state[path_key])
    return None


@log_stage_execution
def evaluate_tables(state: PipelineState) -> PipelineState:
    """
    Score synthetic data against training (and holdout) data.

    Training and synthetic tables come from the state when earlier stages
    produced them, else from trn_path / syn_path. Two-table runs also score
    the synthetic context table against the training context table.

    Args:
        state: Pipeline state with schema, tables or their paths, and report_path

    Returns:
        State with the QA report(s)
    """
    logger = RunLogger(state["run_id"])
    opts: MetricsOptions = state["engine"].metrics
    schema: TableSchema = state["schema"]

    trn = _table(state, "raw", "trn_path")
    syn = _table(state, "synthetic", "syn_path")
    hold = read_csv_table(state["hold_path"]) if state.get("hold_path") else None
    report = evaluate(schema, trn, hold, syn, opts)
    state["qa_report"] = report
    for warning in report.warnings:
        logger.log_warning(warning)

    report_path = state.get("report_path")
    if report_path is not None:
        summary = save_report(report, report_path)
        state["outputs"].extend([str(report_path), str(summary)])

    context_syn = state.get("synthetic_context")
    if context_syn is not None and state.get("context_raw") is not None and state.get("context_schema") is not None:
        context_hold = read_csv_table(state["context_hold_path"]) if state.get("context_hold_path") else None
        context_report = evaluate(state["context_schema"], state["context_raw"], context_hold, context_syn, opts)
        state["context_qa_report"] = context_report
        if report_path is not None:
            context_path = Path(report_path).with_name(f"{Path(report_path).stem}_context.json")
            summary = save_report(context_report, context_path)
            state["outputs"].extend([str(context_path), str(summary)])

    logger.log_info("Evaluation complete", {
        "acc_overall": report.acc_overall,
        "dcr_share": report.dcr_share,
        "noise_floor": report.holdout_reference.acc_overall if report.holdout_reference else None,
    })
    return state
