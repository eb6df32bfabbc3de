"""
QA report assembly.

Fits the metric binning on the training table and scores a synthetic
table against it. When a holdout table is given, the DCR share is added
and the holdout is scored as if it were synthetic (noise floor).
"""

from typing import Dict, List, Optional

import pandas as pd
import structlog

from ..errors import ColumnMismatch, EmptySet
from ..models.report import MetricsOptions, QAReport
from ..models.schema import TableSchema
from .accuracy import bivariate_accuracy, overall_accuracy, univariate_accuracy
from .binning import ColumnBinning, bin_table, fit_binning
from .coherence import coherence_accuracy, subject_bounds
from .privacy import BinnedOneHotEmbedder, RecordEmbedder, dcr_share

logger = structlog.get_logger(__name__)


def check_columns(schema: TableSchema, tables: Dict[str, pd.DataFrame]) -> List[str]:
    """Columns every table must carry: the data columns plus the group key of sequential tables."""
    required = list(schema.data_columns)
    if schema.is_sequential and schema.group_key:
        required.append(schema.group_key)
    for name, df in tables.items():
        missing = [c for c in required if c not in df.columns]
        if missing:
            raise ColumnMismatch(f"{name} table lacks columns {missing}", table=name, missing=missing)
        if len(df) == 0:
            raise EmptySet(f"{name} table has no rows", set=name)
    return required


def _n_records(df: pd.DataFrame, schema: TableSchema) -> int:
    if schema.is_sequential and schema.group_key:
        return int(len(subject_bounds(df, schema.group_key)[1]))
    return len(df)


def score(
    schema: TableSchema,
    trn: pd.DataFrame,
    syn: pd.DataFrame,
    binning: Dict[str, ColumnBinning],
    opts: MetricsOptions,
) -> QAReport:
    """Accuracy part of the report (no DCR, no holdout reference)."""
    trn_bins = bin_table(trn, binning)
    syn_bins = bin_table(syn, binning)

    uni = univariate_accuracy(trn_bins, syn_bins, binning)
    bi = bivariate_accuracy(trn_bins, syn_bins, binning)
    coh = None
    if schema.is_sequential:
        coh = coherence_accuracy(
            trn,
            syn,
            schema.group_key,
            trn_bins,
            syn_bins,
            binning,
            seed=opts.seed,
            exhaustive=opts.exhaustive_coherence,
        )
    overall = overall_accuracy(
        uni.overall,
        bi.overall if bi is not None else None,
        coh.overall if coh is not None else None,
    )
    return QAReport(
        acc_univariate=uni,
        acc_bivariate=bi,
        acc_coherence=coh,
        acc_overall=overall,
        sample_sizes={"trn": _n_records(trn, schema), "syn": _n_records(syn, schema)},
    )


def evaluate(
    schema: TableSchema,
    trn: pd.DataFrame,
    hold: Optional[pd.DataFrame],
    syn: pd.DataFrame,
    opts: Optional[MetricsOptions] = None,
    embedder: Optional[RecordEmbedder] = None,
) -> QAReport:
    """
    Score `syn` against `trn`.

    Args:
        schema: Schema of the evaluated table
        trn: Training table (the binning is fit on it)
        hold: Holdout table, or None to skip DCR and the noise floor
        syn: Synthetic table
        opts: Metric options (defaults when None)
        embedder: Record embedder for DCR (one-hot over the binning when None)

    Raises:
        ColumnMismatch: If a table lacks a data column
        EmptySet: If a table has no rows
    """
    opts = opts or MetricsOptions()
    tables = {"training": trn, "synthetic": syn}
    if hold is not None:
        tables["holdout"] = hold
    check_columns(schema, tables)

    binning = fit_binning(trn, schema, opts)
    report = score(schema, trn, syn, binning, opts)
    if hold is None:
        return report

    group_key = schema.group_key if schema.is_sequential else None
    embedder = embedder or BinnedOneHotEmbedder(binning, group_key=group_key, max_steps=opts.dcr_max_steps)
    share, _ = dcr_share(trn, hold, syn, embedder)

    warnings = []
    n_trn, n_hold = _n_records(trn, schema), _n_records(hold, schema)
    if n_trn != n_hold:
        warnings.append(f"training ({n_trn}) and holdout ({n_hold}) sets differ in size; DCR share is biased")

    reference = score(schema, trn, hold, binning, opts)
    sizes = dict(report.sample_sizes, hold=n_hold)
    logger.info("qa_report", acc_overall=report.acc_overall, dcr_share=share, noise_floor=reference.acc_overall)
    return report.model_copy(
        update={
            "dcr_share": share,
            "holdout_reference": reference,
            "sample_sizes": sizes,
            "warnings": warnings,
        }
    )
