"""Training loop and patience routing."""

from .routing import PatienceState, record_epoch, should_continue_training
from .trainer import fit, split

__all__ = ["PatienceState", "record_epoch", "should_continue_training", "fit", "split"]
