"""
Validation-based model selection.
"""

import logging
import math
from collections.abc import Sequence

from pydantic import BaseModel, Field

from ..nn.module import Module

logger = logging.getLogger(__name__)


class TrainingHistory(BaseModel):
    """Per-epoch losses of one training run."""

    train_losses: list[float] = Field(default_factory=list)
    val_losses: list[float] = Field(default_factory=list)
    best_epoch: int = -1
    best_val_loss: float = math.inf
    steps: int = 0
    stopped_early: bool = False

    @property
    def epochs(self) -> int:
        return len(self.train_losses)


class EarlyStopping:
    """Keeps the parameters with the lowest validation loss.

    ``update`` returns True once ``patience`` epochs pass without improvement.
    """

    def __init__(self, patience: int, modules: Sequence[Module]):
        self.patience = patience
        self.modules = list(modules)
        self.best_loss = math.inf
        self.best_epoch = -1
        self.bad_epochs = 0
        self._snapshot: list[list] | None = None

    def update(self, epoch: int, loss: float) -> bool:
        if loss < self.best_loss:
            self.best_loss = loss
            self.best_epoch = epoch
            self.bad_epochs = 0
            self._snapshot = [m.state_arrays() for m in self.modules]
            return False
        self.bad_epochs += 1
        return self.bad_epochs >= self.patience

    def restore(self) -> None:
        if self._snapshot is None:
            return
        for module, arrays in zip(self.modules, self._snapshot, strict=True):
            module.load_state_arrays(arrays)
        logger.info(
            f"Restored parameters from epoch {self.best_epoch + 1} "
            f"(validation loss {self.best_loss:.6f})"
        )
