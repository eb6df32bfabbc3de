"""
Generation request model.
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


class GenerationRequest(BaseModel):
    """What to sample from a trained model.

    Conditions are given in raw value space; the engine encodes them through
    the codec before sampling.
    """

    model_config = ConfigDict(extra="forbid")

    n_rows: int = Field(default=0, ge=0, description="Rows (flat) or sequences (sequential) to generate")
    temperature: float = Field(default=1.0, gt=0)
    conditions: Dict[str, str] = Field(default_factory=dict, description="Raw column -> fixed value")
    impute: List[str] = Field(default_factory=list, description="Raw columns that must never decode to missing")
    order: Optional[List[int]] = Field(default=None, description="Explicit sub-column visiting order")
    seed: int = 0

    @field_validator("order")
    @classmethod
    def validate_order(cls, v: Optional[List[int]]) -> Optional[List[int]]:
        if v is not None and sorted(v) != list(range(len(v))):
            raise ValueError("order must be a permutation of 0..D-1")
        return v

    @field_validator("impute")
    @classmethod
    def validate_impute(cls, v: List[str]) -> List[str]:
        return list(dict.fromkeys(v))


class GenerationDefaults(BaseModel):
    """`generation` section of config/engine.yaml."""

    model_config = ConfigDict(extra="forbid")

    temperature: float = Field(default=1.0, gt=0)
    seed: int = 0
    argmax_below: float = Field(default=1e-6, gt=0, description="Temperatures below this sample the mode")
    batch_size: int = Field(default=4096, ge=1, description="Rows sampled per forward sweep")
