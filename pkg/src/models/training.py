"""
Training configuration and reports.
"""

import math
from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class StopReason(str, Enum):
    EARLY_STOPPING = "early_stopping"
    MAX_EPOCHS = "max_epochs"
    NON_FINITE_LOSS = "non_finite_loss"


class TrainConfig(BaseModel):
    """Hyperparameters of one fit() run (defaults in config/engine.yaml)."""

    model_config = ConfigDict(extra="forbid")

    batch_size: int = Field(default=256, ge=1)
    initial_lr: float = Field(default=1e-3, gt=0)
    early_stop_patience: int = Field(default=5, ge=1, description="N: epochs without improvement before stopping")
    lr_patience: int = Field(default=3, ge=1, description="K: epochs without improvement before halving the lr")
    val_fraction: float = Field(default=0.10)
    max_epochs: int = Field(default=200, ge=1)
    max_seq_window: int = Field(default=100, ge=1)
    seed: int = 0
    dropout: float = Field(default=0.25, ge=0.0, lt=1.0)
    regressor_depth: int = Field(default=1, ge=1)
    improvement_tol: float = Field(default=1e-5, ge=0.0)
    reset_stop_patience_on_halving: bool = Field(
        default=False, description="Restart the early-stop counter whenever the lr is halved"
    )
    adam_betas: Tuple[float, float] = (0.9, 0.999)
    adam_eps: float = Field(default=1e-8, gt=0)

    @field_validator("val_fraction")
    @classmethod
    def validate_val_fraction(cls, v: float) -> float:
        if not 0.0 < v < 0.5:
            raise ValueError("val_fraction must be in (0, 0.5)")
        return v

    @field_validator("adam_betas")
    @classmethod
    def validate_betas(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if not all(0.0 <= b < 1.0 for b in v):
            raise ValueError("adam betas must be in [0, 1)")
        return v

    @model_validator(mode="after")
    def validate_patience(self) -> "TrainConfig":
        if self.lr_patience > self.early_stop_patience:
            raise ValueError("lr_patience (K) must not exceed early_stop_patience (N)")
        return self


class EpochRecord(BaseModel):
    epoch: int = Field(ge=1)
    train_loss: float
    val_loss: float
    learning_rate: float
    improved: bool = False
    lr_halved: bool = False


class TrainReport(BaseModel):
    """Outcome of a fit() run."""

    epochs: List[EpochRecord] = Field(default_factory=list)
    best_epoch: Optional[int] = None
    best_val_loss: Optional[float] = None
    stop_reason: Optional[StopReason] = None
    wall_time_seconds: float = 0.0
    n_train: int = 0
    n_val: int = 0

    @model_validator(mode="after")
    def _best_is_minimum(self) -> "TrainReport":
        finite = [e.val_loss for e in self.epochs if math.isfinite(e.val_loss)]
        if self.best_val_loss is not None and finite and self.best_val_loss > min(finite) + 1e-12:
            raise ValueError("best_val_loss must be the minimum over epochs")
        return self

    @property
    def train_losses(self) -> List[float]:
        return [e.train_loss for e in self.epochs]

    @property
    def val_losses(self) -> List[float]:
        return [e.val_loss for e in self.epochs]

    def epoch_log(self) -> str:
        """Plain-text epoch log, one line per epoch."""
        lines = ["epoch  train_loss    val_loss        lr  note"]
        for e in self.epochs:
            note = []
            if e.improved:
                note.append("best")
            if e.lr_halved:
                note.append("lr halved")
            lines.append(
                f"{e.epoch:5d}  {e.train_loss:10.5f}  {e.val_loss:10.5f}  {e.learning_rate:8.2e}  {', '.join(note)}"
            )
        lines.append(f"stop: {self.stop_reason.value if self.stop_reason else 'n/a'}; best epoch: {self.best_epoch}")
        return "\n".join(lines) + "\n"
