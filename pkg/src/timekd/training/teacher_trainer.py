"""
Teacher training by cross-modality reconstruction, and artifact collection.
"""

import logging

import numpy as np

from ..autodiff.optim import AdamW
from ..autodiff.tensor import Tape, backward
from ..core.embeddings import EmbeddingStore
from ..core.models import PrivilegedArtifact
from ..errors import NonFiniteError
from ..models.teacher import CrossModalityTeacher
from .early_stopping import EarlyStopping, TrainingHistory
from .hyperparams import HyperParams
from .losses import reconstruction_loss

logger = logging.getLogger(__name__)


class TeacherTrainer:
    """Fits the teacher on precomputed prompt embeddings."""

    def __init__(self, teacher: CrossModalityTeacher, hyper: HyperParams):
        self.teacher = teacher
        self.hyper = hyper
        self.optimizer = AdamW(teacher.parameters(trainable_only=True), hyper.adamw())
        self.rng = np.random.default_rng(hyper.seed)

    def train_step(
        self, l_gt: np.ndarray, l_hd: np.ndarray, targets: np.ndarray, epoch: int = 0, step: int = 0
    ) -> float:
        with Tape() as tape:
            output = self.teacher(l_gt, l_hd)
            loss = reconstruction_loss(output.x_hat, targets)
        value = loss.item()
        if not np.isfinite(value):
            raise NonFiniteError(f"teacher loss is {value} at epoch {epoch + 1}, step {step}")
        self.optimizer.zero_grad()
        backward(loss, tape)
        self.optimizer.step()
        return value

    def evaluate(self, store: EmbeddingStore) -> float:
        """Mean reconstruction loss over every window of ``store``."""
        self.teacher.eval()
        total = 0.0
        for positions in store.batches(self.hyper.batch_size):
            l_gt, l_hd, targets = store.batch(positions)
            output = self.teacher(l_gt, l_hd)
            total += reconstruction_loss(output.x_hat, targets).item() * len(positions)
        return total / len(store)

    def fit(
        self, train_store: EmbeddingStore, val_store: EmbeddingStore | None = None
    ) -> TrainingHistory:
        hyper = self.hyper
        history = TrainingHistory()
        stopper = EarlyStopping(hyper.patience, [self.teacher])
        logger.info(
            f"Training teacher on {len(train_store)} windows "
            f"(batch {hyper.batch_size}, up to {hyper.epochs} epochs)"
        )
        for epoch in range(hyper.epochs):
            self.teacher.train()
            losses = []
            for positions in train_store.batches(hyper.batch_size, self.rng):
                losses.append(self.train_step(*train_store.batch(positions), epoch, history.steps))
                history.steps += 1
                if hyper.max_steps and history.steps >= hyper.max_steps:
                    break
            train_loss = float(np.mean(losses))
            val_loss = (
                self.evaluate(val_store) if val_store is not None and len(val_store) else train_loss
            )
            history.train_losses.append(train_loss)
            history.val_losses.append(val_loss)
            logger.info(
                f"Teacher epoch {epoch + 1}/{hyper.epochs}: "
                f"train={train_loss:.6f} val={val_loss:.6f}"
            )
            if stopper.update(epoch, val_loss):
                history.stopped_early = True
                logger.info(f"Teacher early stop after epoch {epoch + 1}")
                break
            if hyper.max_steps and history.steps >= hyper.max_steps:
                break
        stopper.restore()
        history.best_epoch = stopper.best_epoch
        history.best_val_loss = stopper.best_loss
        self.teacher.eval()
        return history

    def collect_artifacts(self, store: EmbeddingStore) -> list[PrivilegedArtifact]:
        """Teacher features and correlations for every window, in order."""
        self.teacher.eval()
        artifacts = []
        for positions in store.batches(self.hyper.batch_size):
            l_gt, l_hd, _ = store.batch(positions)
            output = self.teacher(l_gt, l_hd)
            for row, position in enumerate(positions):
                artifacts.append(
                    PrivilegedArtifact(
                        index=int(position),
                        a_pe=output.a_pe.data[row].copy(),
                        e_gt=output.e_gt.data[row].copy(),
                    )
                )
        logger.info(f"Collected privileged artifacts for {len(artifacts)} windows")
        return artifacts
