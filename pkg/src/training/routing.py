"""Patience logic deciding what happens after each training epoch."""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

from ..models.training import TrainConfig
from ..observability.logger import RunLogger


@dataclass
class PatienceState:
    """Validation-loss bookkeeping across epochs."""

    best_val_loss: float = math.inf  # strict minimum so far
    best_epoch: Optional[int] = None
    reference_loss: float = math.inf  # last value that counted as an improvement
    epochs_since_improvement: int = 0  # N counter
    epochs_since_lr_change: int = 0  # K counter


def record_epoch(state: PatienceState, epoch: int, val_loss: float, tol: float) -> Tuple[bool, bool]:
    """
    Update the counters with one validation loss.

    Returns:
        (new_best, improved): new_best when the loss is a strict minimum
        (weights are snapshotted); improved when it beats the reference by
        more than `tol` (patience counters restart).
    """
    new_best = val_loss < state.best_val_loss
    if new_best:
        state.best_val_loss = val_loss
        state.best_epoch = epoch
    improved = val_loss < state.reference_loss - tol
    if improved:
        state.reference_loss = val_loss
        state.epochs_since_improvement = 0
        state.epochs_since_lr_change = 0
    else:
        state.epochs_since_improvement += 1
        state.epochs_since_lr_change += 1
    return new_best, improved


def should_continue_training(
    state: PatienceState,
    cfg: TrainConfig,
    epoch: int,
    logger: Optional[RunLogger] = None,
) -> str:
    """
    Decide the next action after an epoch.

    Decision criteria (checked in order):
    1. N epochs without improvement -> "stop"
    2. max_epochs reached -> "max_epochs"
    3. K epochs without improvement since the last improvement or halving -> "halve_lr"
    4. Otherwise -> "continue"

    Args:
        state: Patience counters after record_epoch()
        cfg: Training configuration (K, N, max_epochs)
        epoch: 1-based epoch just finished
        logger: Optional run logger for the decision

    Returns:
        "stop", "max_epochs", "halve_lr" or "continue"
    """
    if state.epochs_since_improvement >= cfg.early_stop_patience:
        decision = "stop"
    elif epoch >= cfg.max_epochs:
        decision = "max_epochs"
    elif state.epochs_since_lr_change >= cfg.lr_patience:
        decision = "halve_lr"
    else:
        decision = "continue"

    if logger is not None and decision != "continue":
        logger.log_info(
            f"Routing decision: {decision.upper()}",
            {
                "epoch": epoch,
                "epochs_since_improvement": state.epochs_since_improvement,
                "best_epoch": state.best_epoch,
            },
        )
    return decision


def apply_lr_halving(state: PatienceState, cfg: TrainConfig) -> None:
    state.epochs_since_lr_change = 0
    if cfg.reset_stop_patience_on_halving:
        state.epochs_since_improvement = 0
