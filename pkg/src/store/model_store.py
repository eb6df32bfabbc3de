"""
Model store: a directory holding everything needed to sample from a trained model.

Layout:
    schema.json         TableSchema of the modelled table
    model.json          format version, architecture, config digest, weight manifest
    weights.bin         little-endian float32 blob described by the manifest
    train_report.json   TrainReport of the fit, without wall time
    train_log.txt       plain-text epoch log
    context/            the same layout for the flat context model (two-table models)

A store is written into a temporary sibling directory and renamed into
place, so readers never see a partial store.
"""

import json
import shutil
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import structlog

from ..argn.flat_model import FlatModel
from ..argn.seq_model import SequentialModel
from ..errors import InputFileError, StoreVersionError
from ..kernel.params import pack_params, unpack_params
from ..models.architecture import Architecture, ModelKind
from ..models.schema import TableSchema
from ..models.training import TrainConfig, TrainReport
from ..utils.helpers import canonical_json, replace_directory, sha256_digest

logger = structlog.get_logger(__name__)

FORMAT_VERSION = "1.0"
CONTEXT_DIR = "context"

Model = Union[FlatModel, SequentialModel]


def config_digest(config: TrainConfig) -> str:
    """sha256 of the canonical JSON of a TrainConfig."""
    return sha256_digest(canonical_json(config.model_dump(mode="json")))


@dataclass
class StoredModel:
    """A trained model with its schema, config and (for two-table models) context model."""

    schema: TableSchema
    model: Model
    config: TrainConfig
    report: Optional[TrainReport] = None
    context: Optional["StoredModel"] = None

    @property
    def kind(self) -> ModelKind:
        return self.model.arch.kind


class ModelStore:
    """Reads and writes one model store directory."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)

    def exists(self) -> bool:
        return (self.path / "model.json").is_file()

    # ------------------------------------------------------------------
    # Save
    # ------------------------------------------------------------------

    def save(self, stored: StoredModel) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        tmp = Path(tempfile.mkdtemp(dir=self.path.parent, prefix=f".{self.path.name}.tmp"))
        try:
            _write(tmp, stored)
            replace_directory(tmp, self.path)
        except BaseException:
            shutil.rmtree(tmp, ignore_errors=True)
            raise
        logger.info("model_store_saved", path=str(self.path), kind=stored.kind.value)

    # ------------------------------------------------------------------
    # Load
    # ------------------------------------------------------------------

    def load(self) -> StoredModel:
        if not self.exists():
            raise InputFileError(f"no model store at {self.path}", path=str(self.path))
        stored = _read(self.path)
        logger.info("model_store_loaded", path=str(self.path), kind=stored.kind.value)
        return stored


def _write(directory: Path, stored: StoredModel) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    blob, manifest = pack_params(stored.model.params)
    model_json = {
        "format_version": FORMAT_VERSION,
        "kind": stored.kind.value,
        "architecture": stored.model.arch.model_dump(mode="json"),
        "config_digest": config_digest(stored.config),
        "train_config": stored.config.model_dump(mode="json"),
        "weights": manifest,
        "has_context": stored.context is not None,
    }
    (directory / "schema.json").write_text(canonical_json(stored.schema.model_dump(mode="json")), encoding="utf-8")
    (directory / "model.json").write_text(canonical_json(model_json), encoding="utf-8")
    (directory / "weights.bin").write_bytes(blob)
    if stored.report is not None:
        (directory / "train_report.json").write_text(
            canonical_json(stored.report.model_dump(mode="json", exclude={"wall_time_seconds"})), encoding="utf-8"
        )
        (directory / "train_log.txt").write_text(stored.report.epoch_log(), encoding="utf-8")
    if stored.context is not None:
        _write(directory / CONTEXT_DIR, stored.context)


def check_version(version: str, path: Path) -> None:
    """Only the major version must match; minor versions stay readable."""
    major = str(version).split(".")[0]
    if major != FORMAT_VERSION.split(".")[0]:
        raise StoreVersionError(
            f"model store {path} has format version {version}, expected {FORMAT_VERSION}",
            found=version,
            expected=FORMAT_VERSION,
        )


def _read(directory: Path) -> StoredModel:
    model_json = json.loads((directory / "model.json").read_text(encoding="utf-8"))
    check_version(model_json.get("format_version", "0"), directory)

    arch = Architecture.model_validate(model_json["architecture"])
    config = TrainConfig.model_validate(model_json["train_config"])
    params = unpack_params((directory / "weights.bin").read_bytes(), model_json["weights"])
    if arch.kind == ModelKind.FLAT:
        model: Model = FlatModel(arch, params=params)
    else:
        model = SequentialModel(arch, params=params, max_seq_window=config.max_seq_window)

    schema = TableSchema.model_validate_json((directory / "schema.json").read_text(encoding="utf-8"))
    report = None
    report_path = directory / "train_report.json"
    if report_path.is_file():
        report = TrainReport.model_validate_json(report_path.read_text(encoding="utf-8"))
    context = _read(directory / CONTEXT_DIR) if model_json.get("has_context") else None
    return StoredModel(schema=schema, model=model, config=config, report=report, context=context)
