"""Fidelity and privacy metrics."""

from .accuracy import bivariate_accuracy, overall_accuracy, univariate_accuracy
from .binning import ColumnBinning, bin_table, fit_binning
from .coherence import coherence_accuracy
from .privacy import BinnedOneHotEmbedder, RecordEmbedder, dcr_share
from .report import evaluate

__all__ = [
    "BinnedOneHotEmbedder",
    "ColumnBinning",
    "RecordEmbedder",
    "bin_table",
    "bivariate_accuracy",
    "coherence_accuracy",
    "dcr_share",
    "evaluate",
    "fit_binning",
    "overall_accuracy",
    "univariate_accuracy",
]
