"""
Architecture manifests for the flat and sequential networks.

An Architecture holds every size needed to rebuild a network's parameter
shapes, together with the heuristic inputs that produced them. It is
stored verbatim in model.json.
"""

from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..kernel.sizing import context_units, embed_dim, history_units, regressor_units


class ModelKind(str, Enum):
    FLAT = "flat"
    SEQUENTIAL = "sequential"


class Architecture(BaseModel):
    """Layer sizes of one network."""

    model_config = ConfigDict(extra="forbid")

    kind: ModelKind
    sub_column_names: List[str]
    cardinalities: List[int]
    embed_dims: List[int]
    regressor_units: List[int]
    regressor_depth: int = Field(default=1, ge=1)
    dropout: float = Field(default=0.25, ge=0.0, lt=1.0)

    # Sequential only
    n_length_columns: int = 0
    n_index_columns: int = 0
    median_length: float = 1.0
    history_units: int = 0

    # Two-table only
    context_sub_column_names: List[str] = Field(default_factory=list)
    context_cardinalities: List[int] = Field(default_factory=list)
    context_embed_dims: List[int] = Field(default_factory=list)
    context_units: int = 0

    @model_validator(mode="after")
    def _check_lengths(self) -> "Architecture":
        n = len(self.cardinalities)
        if not (len(self.sub_column_names) == len(self.embed_dims) == len(self.regressor_units) == n):
            raise ValueError("per-sub-column size lists must have equal length")
        if len(self.context_cardinalities) != len(self.context_embed_dims):
            raise ValueError("context size lists must have equal length")
        if self.kind == ModelKind.FLAT and (self.history_units or self.context_units):
            raise ValueError("flat networks have no history or context")
        if self.kind == ModelKind.SEQUENTIAL and self.history_units < 1:
            raise ValueError("sequential networks need history_units >= 1")
        return self

    @property
    def n_sub_columns(self) -> int:
        return len(self.cardinalities)

    @property
    def embed_width(self) -> int:
        return sum(self.embed_dims)

    @property
    def context_width(self) -> int:
        return sum(self.context_embed_dims)

    @property
    def head_input_width(self) -> int:
        return self.embed_width + self.history_units + self.context_units

    @property
    def n_leading(self) -> int:
        """Length and index sub-columns, which sit after the data sub-columns."""
        return self.n_length_columns + self.n_index_columns

    @property
    def n_data_columns(self) -> int:
        return self.n_sub_columns - self.n_leading

    @property
    def length_columns(self) -> List[int]:
        start = self.n_data_columns
        return list(range(start, start + self.n_length_columns))

    @property
    def index_columns(self) -> List[int]:
        start = self.n_data_columns + self.n_length_columns
        return list(range(start, start + self.n_index_columns))

    @property
    def has_context(self) -> bool:
        return self.context_units > 0

    @classmethod
    def flat(cls, names: List[str], cardinalities: List[int], regressor_depth: int = 1, dropout: float = 0.25) -> "Architecture":
        return cls(
            kind=ModelKind.FLAT,
            sub_column_names=list(names),
            cardinalities=list(cardinalities),
            embed_dims=[embed_dim(c) for c in cardinalities],
            regressor_units=[regressor_units(c) for c in cardinalities],
            regressor_depth=regressor_depth,
            dropout=dropout,
        )

    @classmethod
    def sequential(
        cls,
        names: List[str],
        cardinalities: List[int],
        n_length_columns: int,
        n_index_columns: int,
        median_length: float,
        context_names: Optional[List[str]] = None,
        context_cardinalities: Optional[List[int]] = None,
        regressor_depth: int = 1,
        dropout: float = 0.25,
    ) -> "Architecture":
        embed_dims = [embed_dim(c) for c in cardinalities]
        context_cardinalities = list(context_cardinalities or [])
        context_embed_dims = [embed_dim(c) for c in context_cardinalities]
        median_length = max(1.0, float(median_length))
        return cls(
            kind=ModelKind.SEQUENTIAL,
            sub_column_names=list(names),
            cardinalities=list(cardinalities),
            embed_dims=embed_dims,
            regressor_units=[regressor_units(c) for c in cardinalities],
            regressor_depth=regressor_depth,
            dropout=dropout,
            n_length_columns=n_length_columns,
            n_index_columns=n_index_columns,
            median_length=median_length,
            history_units=history_units(sum(embed_dims), median_length),
            context_sub_column_names=list(context_names or []),
            context_cardinalities=context_cardinalities,
            context_embed_dims=context_embed_dims,
            context_units=context_units(sum(context_embed_dims)) if context_embed_dims else 0,
        )
