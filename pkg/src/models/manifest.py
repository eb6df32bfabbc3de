"""
Dataset manifests and run configuration.
"""

import json
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .generation import GenerationRequest
from .schema import TableRole
from .training import TrainConfig


def _check_exists(path: Optional[Path], label: str) -> None:
    if path is not None and not Path(path).exists():
        raise ValueError(f"{label} does not exist: {path}")


class DatasetManifest(BaseModel):
    """A flat table, or a sequential table with an optional flat context table.

    For two-table datasets `group_key` groups the sequential rows and holds
    values of the context table's `context_key` column.
    """

    model_config = ConfigDict(extra="forbid")

    data_csv: Path
    schema_json: Optional[Path] = Field(default=None, description="Pre-computed schema of data_csv")
    kinds_json: Optional[Path] = None
    holdout_csv: Optional[Path] = None
    table_role: TableRole = TableRole.FLAT
    group_key: Optional[str] = None
    context_csv: Optional[Path] = None
    context_schema_json: Optional[Path] = None
    context_kinds_json: Optional[Path] = None
    context_holdout_csv: Optional[Path] = None
    context_key: Optional[str] = None

    @model_validator(mode="after")
    def _check(self) -> "DatasetManifest":
        for label in (
            "data_csv", "schema_json", "kinds_json", "holdout_csv",
            "context_csv", "context_schema_json", "context_kinds_json", "context_holdout_csv",
        ):
            _check_exists(getattr(self, label), label)
        if self.table_role == TableRole.SEQUENTIAL and not self.group_key:
            raise ValueError("sequential datasets must name a group_key")
        if self.context_csv is not None:
            if self.table_role != TableRole.SEQUENTIAL:
                raise ValueError("a context table requires a sequential data table")
            if not self.context_key:
                raise ValueError("context_csv requires context_key")
        return self

    @classmethod
    def from_json_file(cls, path: Path) -> "DatasetManifest":
        """Load a manifest, resolving relative paths against its directory."""
        path = Path(path)
        raw = json.loads(path.read_text(encoding="utf-8"))
        for key, value in list(raw.items()):
            if key.endswith(("_csv", "_json")) and value is not None and not Path(value).is_absolute():
                raw[key] = str(path.parent / value)
        return cls.model_validate(raw)


class RunConfig(BaseModel):
    """End-to-end pipeline run: analyze, train, generate and evaluate."""

    model_config = ConfigDict(extra="forbid")

    manifest: Path
    training: TrainConfig = Field(default_factory=TrainConfig)
    generation: GenerationRequest = Field(default_factory=GenerationRequest)
    output_dir: Path

    @model_validator(mode="after")
    def _check(self) -> "RunConfig":
        _check_exists(self.manifest, "manifest")
        return self
