"""
Training loop.

A seeded split holds out whole rows (flat) or whole sequences
(sequential) for validation. Each epoch shuffles the training units,
takes one optimiser step per batch, then scores the validation set under
the canonical order. Patience rules halve the learning rate and stop
training; the weights of the best validation epoch are returned.
"""

import math
import time
from typing import Callable, Optional, Tuple, Union

import numpy as np
import structlog

from ..argn.flat_model import FlatModel
from ..argn.seq_model import SequentialModel
from ..errors import NonFiniteLoss, TooFewRows
from ..kernel.optim import AdamState, adam_step
from ..kernel.params import Params
from ..models.encoded import TrainingData
from ..models.training import EpochRecord, StopReason, TrainConfig, TrainReport
from ..observability.logger import RunLogger
from .routing import PatienceState, apply_lr_halving, record_epoch, should_continue_training

logger = structlog.get_logger(__name__)

MIN_UNITS = 10

Model = Union[FlatModel, SequentialModel]


def split(data: TrainingData, val_fraction: float, seed: int) -> Tuple[TrainingData, TrainingData]:
    """
    Seeded uniform train/validation split.

    Sequential data is split by group so a sequence never straddles the
    two sets. The validation set gets round(n * val_fraction) units, at
    least one.
    """
    n = data.n_units
    unit = "groups" if data.table.is_sequential else "rows"
    if n < MIN_UNITS:
        raise TooFewRows(f"need at least {MIN_UNITS} {unit} to split off validation, got {n}", n=n)
    perm = np.random.default_rng(seed).permutation(n)
    n_val = max(1, int(math.floor(n * val_fraction + 0.5)))
    val_ids = np.sort(perm[:n_val])
    train_ids = np.sort(perm[n_val:])
    return data.take(train_ids), data.take(val_ids)


def _snapshot(params: Params) -> Params:
    return {name: value.copy() for name, value in params.items()}


def fit(
    model: Model,
    train: TrainingData,
    val: TrainingData,
    cfg: TrainConfig,
    run_logger: Optional[RunLogger] = None,
    on_epoch: Optional[Callable[[EpochRecord], None]] = None,
) -> Tuple[Params, TrainReport]:
    """
    Train `model` in place and restore the best-validation weights.

    Args:
        model: Flat or sequential network
        train: Training units
        val: Validation units
        cfg: Training configuration
        run_logger: Optional logger receiving one event per epoch
        on_epoch: Optional callback per finished epoch (CLI progress lines)

    Returns:
        (best params, TrainReport)

    Raises:
        NonFiniteLoss: a batch or validation loss is NaN/Inf; carries the
            report of the epochs completed so far
    """
    start = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    optimizer = AdamState(lr=cfg.initial_lr, betas=tuple(cfg.adam_betas), eps=cfg.adam_eps)
    patience = PatienceState()
    report = TrainReport(n_train=train.n_units, n_val=val.n_units)
    best_params = _snapshot(model.params)

    def abort(epoch: int, where: str) -> NonFiniteLoss:
        report.stop_reason = StopReason.NON_FINITE_LOSS
        report.best_epoch = patience.best_epoch
        report.best_val_loss = patience.best_val_loss if patience.best_epoch is not None else None
        report.wall_time_seconds = time.perf_counter() - start
        logger.error("non_finite_loss", epoch=epoch, where=where)
        return NonFiniteLoss(f"non-finite {where} loss in epoch {epoch}", report=report, epoch=epoch)

    for epoch in range(1, cfg.max_epochs + 1):
        lr_used = optimizer.lr
        total, count = 0.0, 0
        for batch in model.iter_batches(train, cfg.batch_size, rng):
            loss, grads = model.loss_and_grads(batch, rng)
            if not math.isfinite(loss) or grads is None:
                raise abort(epoch, "training")
            adam_step(model.params, grads, optimizer)
            size = len(batch) if isinstance(batch, np.ndarray) else batch.batch_size
            total += loss * size
            count += size
        train_loss = total / max(count, 1)

        val_loss = model.evaluate(val, cfg.batch_size)
        if not math.isfinite(val_loss):
            raise abort(epoch, "validation")

        new_best, _ = record_epoch(patience, epoch, val_loss, cfg.improvement_tol)
        if new_best:
            best_params = _snapshot(model.params)
        decision = should_continue_training(patience, cfg, epoch, run_logger)
        halved = decision == "halve_lr"
        if halved:
            optimizer.lr *= 0.5
            apply_lr_halving(patience, cfg)

        record = EpochRecord(
            epoch=epoch,
            train_loss=train_loss,
            val_loss=val_loss,
            learning_rate=lr_used,
            improved=new_best,
            lr_halved=halved,
        )
        report.epochs.append(record)
        if run_logger is not None:
            run_logger.log_epoch(record)
        if on_epoch is not None:
            on_epoch(record)

        if decision == "stop":
            report.stop_reason = StopReason.EARLY_STOPPING
            break
        if decision == "max_epochs":
            report.stop_reason = StopReason.MAX_EPOCHS
            break

    model.params = best_params
    report.best_epoch = patience.best_epoch
    report.best_val_loss = patience.best_val_loss
    report.wall_time_seconds = time.perf_counter() - start
    logger.info(
        "training_finished",
        epochs=len(report.epochs),
        best_epoch=report.best_epoch,
        best_val_loss=report.best_val_loss,
        stop_reason=report.stop_reason.value if report.stop_reason else None,
    )
    return best_params, report
