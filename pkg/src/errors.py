"""
Exception hierarchy for the synthetic data engine.

Every error carries the CLI exit code it maps to, so the command-line
surface can translate failures without a lookup table.
"""

from typing import Any, Optional


class SynthError(Exception):
    """Base class for all engine errors."""

    exit_code: int = 1

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.context = context


# =============================================================================
# Schema / input errors (exit 2)
# =============================================================================

class InputError(SynthError):
    exit_code = 2


class EmptyTable(InputError):
    """The table to analyze has no rows or no columns."""


class MixedTypeColumn(InputError):
    """Cells of a column cannot be parsed under its (declared) kind."""


class UnknownGroupKey(InputError):
    """The group key or context link is not a column of the table."""


class GeospatialPairError(InputError):
    """A geospatial column was declared without a valid lat/lon pair."""


class InputFileError(InputError):
    """A referenced input file does not exist or cannot be read."""


class ConfigError(InputError):
    """A configuration file failed validation."""


# =============================================================================
# Numerical errors (exit 3)
# =============================================================================

class NumericalError(SynthError):
    exit_code = 3


class NonFiniteValue(NumericalError):
    """NaN or Inf appeared in a forward/backward pass or an optimizer step."""


class NonFiniteLoss(NumericalError):
    """Training produced a non-finite loss; carries the partial report."""

    def __init__(self, message: str, report: Optional[Any] = None, **context: Any):
        super().__init__(message, **context)
        self.report = report


# =============================================================================
# Schema / data mismatch (exit 4)
# =============================================================================

class MismatchError(SynthError):
    exit_code = 4


class SchemaMismatch(MismatchError):
    """A table does not fit the schema it is encoded with."""


class ContextSchemaMismatch(MismatchError):
    """Context rows do not match the context schema the model was trained on."""


class NotSequential(MismatchError):
    """A sequential-only operation was called on a flat table."""


class IndexOutOfRange(MismatchError):
    """An encoded index exceeds the cardinality of its sub-column."""


class TooFewRows(MismatchError):
    """Not enough rows (flat) or groups (sequential) to split off validation."""


class ShapeMismatch(MismatchError):
    """Array shapes are incompatible for a kernel operation."""


class StoreVersionError(MismatchError):
    """A model store was written by an incompatible major format version."""


# =============================================================================
# Generation errors (exit 5)
# =============================================================================

class GenerationError(SynthError):
    exit_code = 5


class ConditionIndexInvalid(GenerationError):
    """A condition value does not map to a valid category."""


class AllProbabilityMassExcluded(GenerationError):
    """Imputation removed the only class with non-zero probability."""


# =============================================================================
# Evaluation errors (exit 6)
# =============================================================================

class EvaluationError(SynthError):
    exit_code = 6


class ColumnMismatch(EvaluationError):
    """Training, holdout and synthetic tables do not share their columns."""


class EmptyColumn(EvaluationError):
    """A metric column has no rows to compute frequencies from."""


class EmptySet(EvaluationError):
    """One of the record sets for the DCR share is empty."""


class NoSequencesOfLengthTwo(EvaluationError):
    """No subject has two successive steps, so coherence is undefined."""
