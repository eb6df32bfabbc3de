"""
Table schema models.

This module defines the pydantic models produced by the schema analyzer
and consumed by the codec:
- Column kinds and encoding strategies
- Per-column encoding specs with their sub-column layout
- The table schema tying the specs together
- The options steering the analysis
"""

from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

MISSING_TOKEN = "_MISSING_"
RARE_TOKEN = "_RARE_"
PAD_TOKEN = "_PAD_"

SEQ_LEN_COLUMN = "__seq_len__"
SEQ_INDEX_COLUMN = "__seq_index__"

DEFAULT_DATETIME_FORMATS = (
    "%Y-%m-%d %H:%M:%S.%f",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S.%f",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d",
)


class ColumnKind(str, Enum):
    CATEGORICAL = "categorical"
    NUMERIC = "numeric"
    DATETIME = "datetime"
    DATETIME_RELATIVE = "datetime_relative"
    CHARACTER = "character"
    GEOSPATIAL = "geospatial"


class EncodingStrategy(str, Enum):
    CATEGORICAL = "categorical"
    NUMERIC_DISCRETE = "numeric_discrete"
    NUMERIC_BINNED = "numeric_binned"
    NUMERIC_DIGIT = "numeric_digit"
    DATETIME_SPLIT = "datetime_split"
    DATETIME_RELATIVE = "datetime_relative"
    CHARACTER_SPLIT = "character_split"
    QUADTILE = "quadtile"


class TableRole(str, Enum):
    FLAT = "flat"
    SEQUENTIAL = "sequential"


# =============================================================================
# Column specs
# =============================================================================

class SubColumn(BaseModel):
    """One categorical feature produced by encoding a raw column."""

    name: str = Field(description="Sub-column name, prefixed by its raw column")
    cardinality: int = Field(ge=1, description="Number of categories")
    labels: List[str] = Field(description="Category label per index")

    @model_validator(mode="after")
    def _labels_match_cardinality(self) -> "SubColumn":
        if len(self.labels) != self.cardinality:
            raise ValueError(
                f"sub-column {self.name}: {len(self.labels)} labels for cardinality {self.cardinality}"
            )
        return self


class DigitLayout(BaseModel):
    """Digit positions of a numeric_digit column."""

    has_sign: bool = False
    integer_digits: int = Field(ge=1)
    fraction_digits: int = Field(ge=0, le=6)


class EncodingSpec(BaseModel):
    """Per-column analysis result."""

    column_name: str
    kind: ColumnKind
    strategy: EncodingStrategy
    source_columns: List[str] = Field(
        default_factory=list,
        description="Raw columns feeding this spec (lat/lon for geospatial, else the column itself)",
    )
    categories: List[str] = Field(
        default_factory=list,
        description="Category labels incl. reserved RARE/MISSING tokens (categorical, numeric_discrete)",
    )
    bin_edges: List[float] = Field(default_factory=list, description="numeric_binned only")
    clip_low: Optional[float] = None
    clip_high: Optional[float] = None
    is_integer: bool = False
    has_missing: bool = False
    digit_layout: Optional[DigitLayout] = None
    max_string_len: Optional[int] = None
    quadtile_depth: Optional[int] = None
    has_time: bool = True
    has_millis: bool = False
    relative_anchor: Optional[float] = Field(
        default=None, description="datetime_relative: fallback anchor when a sequence start decodes to MISSING"
    )
    relative_start: Optional["EncodingSpec"] = Field(
        default=None,
        description="datetime_relative: calendar split of each sequence's first timestamp; "
        "its sub-columns follow the offset sub-columns",
    )
    value_strategy: Optional[EncodingStrategy] = Field(
        default=None, description="datetime_relative: discretization of the offsets"
    )
    sub_columns: List[SubColumn]

    @model_validator(mode="after")
    def _check_invariants(self) -> "EncodingSpec":
        if self.bin_edges and any(b <= a for a, b in zip(self.bin_edges, self.bin_edges[1:])):
            raise ValueError(f"{self.column_name}: bin_edges must be strictly increasing")
        if self.clip_low is not None and self.clip_high is not None and self.clip_low > self.clip_high:
            raise ValueError(f"{self.column_name}: clip_low > clip_high")
        if not self.sub_columns:
            raise ValueError(f"{self.column_name}: at least one sub-column required")
        return self

    @property
    def width(self) -> int:
        return len(self.sub_columns)

    def missing_slots(self) -> List[Tuple[int, int]]:
        """(local sub-column, category index) pairs carrying the MISSING token."""
        slots = []
        for j, sub in enumerate(self.sub_columns):
            if MISSING_TOKEN in sub.labels:
                slots.append((j, sub.labels.index(MISSING_TOKEN)))
        return slots


EncodingSpec.model_rebuild()


class TableSchema(BaseModel):
    """Ordered specs of one table plus its role in the dataset."""

    specs: List[EncodingSpec]
    table_role: TableRole = TableRole.FLAT
    group_key: Optional[str] = None
    context_link: Optional[str] = None
    seq_len_spec: Optional[EncodingSpec] = None
    seq_index_spec: Optional[EncodingSpec] = None
    datetime_formats: List[str] = Field(
        default_factory=lambda: list(DEFAULT_DATETIME_FORMATS),
        description="Formats tried, in order, when parsing datetime cells",
    )

    @model_validator(mode="after")
    def _check_role(self) -> "TableSchema":
        if self.table_role == TableRole.SEQUENTIAL and not self.group_key:
            raise ValueError("sequential tables must name a group_key")
        return self

    @property
    def is_sequential(self) -> bool:
        return self.table_role == TableRole.SEQUENTIAL

    @property
    def data_columns(self) -> List[str]:
        """Raw columns covered by the specs, in schema order."""
        cols: List[str] = []
        for spec in self.specs:
            cols.extend(spec.source_columns)
        return cols

    def all_specs(self) -> List[EncodingSpec]:
        """Data specs followed by the sequence length/index specs, if any."""
        specs = list(self.specs)
        if self.seq_len_spec is not None:
            specs.append(self.seq_len_spec)
        if self.seq_index_spec is not None:
            specs.append(self.seq_index_spec)
        return specs

    def sub_columns(self, with_sequence_columns: bool = True) -> List[SubColumn]:
        specs = self.all_specs() if with_sequence_columns else self.specs
        return [sub for spec in specs for sub in spec.sub_columns]

    def spec_offsets(self, with_sequence_columns: bool = True) -> Dict[str, int]:
        """Global index of the first sub-column of every spec."""
        offsets: Dict[str, int] = {}
        pos = 0
        specs = self.all_specs() if with_sequence_columns else self.specs
        for spec in specs:
            offsets[spec.column_name] = pos
            pos += spec.width
        return offsets

    def spec_for(self, column: str) -> EncodingSpec:
        for spec in self.all_specs():
            if spec.column_name == column or column in spec.source_columns:
                return spec
        raise KeyError(column)


# =============================================================================
# Analysis options
# =============================================================================

class GeoPair(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lat: str
    lon: str


class AnalysisOptions(BaseModel):
    """Knobs of the schema analyzer (defaults in config/engine.yaml)."""

    model_config = ConfigDict(extra="forbid")

    rare_min_count: int = Field(default=5, ge=1)
    discrete_max: int = Field(default=100, ge=1)
    max_bins: int = Field(default=100, ge=2, le=100)
    clip_quantiles: Tuple[float, float] = (0.001, 0.999)
    max_string_len: int = Field(default=50, ge=1)
    max_fraction_digits: int = Field(default=6, ge=0, le=6)
    quadtile_max_depth: int = Field(default=20, ge=1, le=20)
    quadtile_leaf_target: int = Field(default=100, ge=1)
    datetime_formats: List[str] = Field(default_factory=lambda: list(DEFAULT_DATETIME_FORMATS))
    numeric_overrides: Dict[str, EncodingStrategy] = Field(default_factory=dict)
    geo_columns: Dict[str, GeoPair] = Field(default_factory=dict)

    @field_validator("clip_quantiles")
    @classmethod
    def validate_quantiles(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        low, high = v
        if not 0.0 <= low < high <= 1.0:
            raise ValueError("clip_quantiles must satisfy 0 <= low < high <= 1")
        return v

    @field_validator("numeric_overrides")
    @classmethod
    def validate_overrides(cls, v: Dict[str, EncodingStrategy]) -> Dict[str, EncodingStrategy]:
        allowed = {
            EncodingStrategy.NUMERIC_DISCRETE,
            EncodingStrategy.NUMERIC_BINNED,
            EncodingStrategy.NUMERIC_DIGIT,
        }
        for column, strategy in v.items():
            if strategy not in allowed:
                raise ValueError(f"{column}: {strategy.value} is not a numeric strategy")
        return v
