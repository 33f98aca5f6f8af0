"""
Privileged knowledge distillation into the time series student.

Staged mode reads teacher features and correlations from the artifact cache.
Joint mode trains teacher and student in one loop; the teacher is updated by
its reconstruction loss only, since its signals enter the student's loss
detached.
"""

import asyncio
import logging
from collections.abc import Sequence

import numpy as np

from ..autodiff.optim import AdamW
from ..autodiff.tensor import Tape, Tensor, backward
from ..core.embeddings import EmbeddingStore
from ..core.models import PrivilegedArtifact
from ..data.windows import TimeSeriesWindow
from ..errors import ContractError, NonFiniteError, ShapeError
from ..managers.cache import CacheReader
from ..models.student import StudentOutput, TimeSeriesStudent
from ..models.teacher import CrossModalityTeacher
from .early_stopping import EarlyStopping, TrainingHistory
from .hyperparams import HyperParams
from .losses import (
    correlation_loss,
    feature_loss,
    forecast_loss,
    pkd_loss,
    reconstruction_loss,
    total_loss,
)

logger = logging.getLogger(__name__)


def stack_histories(windows: Sequence[TimeSeriesWindow]) -> np.ndarray:
    return np.stack([w.x_h for w in windows])


def stack_targets(windows: Sequence[TimeSeriesWindow], dtype: np.dtype) -> np.ndarray:
    return np.stack([w.normalized_target() for w in windows]).astype(dtype)


def student_objective(
    student: TimeSeriesStudent,
    output: StudentOutput,
    targets: np.ndarray,
    hyper: HyperParams,
    a_pe: np.ndarray | Tensor | None = None,
    e_gt: np.ndarray | Tensor | None = None,
    l_recon: Tensor | None = None,
) -> tuple[Tensor, dict[str, float]]:
    """Weighted objective for one batch plus its individual terms."""
    l_fcst = forecast_loss(student.standardized_prediction(output), targets)
    l_cd = l_fd = None
    if hyper.distills:
        if hyper.lambda_c > 0:
            l_cd = correlation_loss(a_pe, output.a_tse)
        if hyper.lambda_e > 0:
            l_fd = feature_loss(e_gt, output.t_bar)
    l_pkd = pkd_loss(l_cd, l_fd, hyper.lambda_c, hyper.lambda_e) if hyper.distills else None
    loss = total_loss(
        l_recon, l_pkd, l_fcst, hyper.lambda_r if l_recon is not None else 0.0,
        hyper.lambda_p, hyper.lambda_f,
    )
    terms = {
        name: term.item()
        for name, term in (("recon", l_recon), ("cd", l_cd), ("fd", l_fd), ("fcst", l_fcst))
        if term is not None
    }
    if not isinstance(loss, Tensor):
        raise ContractError("every loss weight is zero; nothing to optimize")
    return loss, terms


def forecast_validation_loss(
    student: TimeSeriesStudent,
    windows: Sequence[TimeSeriesWindow],
    batch_size: int,
) -> float:
    """Mean forecasting loss over ``windows`` in eval mode."""
    student.eval()
    dtype = student.embedding.weight.dtype
    total = 0.0
    for start in range(0, len(windows), batch_size):
        chunk = windows[start : start + batch_size]
        output = student(stack_histories(chunk))
        loss = forecast_loss(student.standardized_prediction(output), stack_targets(chunk, dtype))
        total += loss.item() * len(chunk)
    return total / len(windows)


class StudentTrainer:
    """Staged distillation: the teacher only exists as cached artifacts."""

    def __init__(
        self,
        student: TimeSeriesStudent,
        hyper: HyperParams,
        cache: CacheReader | None = None,
    ):
        self.student = student
        self.hyper = hyper
        self.cache = cache
        self.optimizer = AdamW(student.parameters(trainable_only=True), hyper.adamw())
        self.rng = np.random.default_rng(hyper.seed)
        self._buffer: dict[int, PrivilegedArtifact] = {}
        if hyper.distills:
            if cache is None:
                raise ContractError("distillation needs the teacher artifact cache")
            config = student.config
            if (cache.num_variables, cache.model_dim) != (config.num_variables, config.model_dim):
                raise ShapeError(
                    f"cache holds N={cache.num_variables}, D_m={cache.model_dim}; "
                    f"student has N={config.num_variables}, D_m={config.model_dim}"
                )

    def _prefetch(self, indices: np.ndarray) -> None:
        artifacts = asyncio.run(self.cache.prefetch([int(i) for i in indices]))
        self._buffer = {a.index: a for a in artifacts}

    def teacher_signals(
        self, positions: np.ndarray, upcoming: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """Cached (B, N, N) correlations and (B, N, D_m) features for a batch."""
        if any(int(i) not in self._buffer for i in positions):
            self._prefetch(upcoming[: max(self.hyper.prefetch_windows, len(positions))])
        records = [self._buffer[int(i)] for i in positions]
        return np.stack([r.a_pe for r in records]), np.stack([r.e_gt for r in records])

    def train_step(
        self,
        windows: Sequence[TimeSeriesWindow],
        a_pe: np.ndarray | None = None,
        e_gt: np.ndarray | None = None,
        epoch: int = 0,
        step: int = 0,
    ) -> float:
        dtype = self.student.embedding.weight.dtype
        with Tape() as tape:
            output = self.student(stack_histories(windows))
            loss, _ = student_objective(
                self.student, output, stack_targets(windows, dtype), self.hyper, a_pe, e_gt
            )
        value = loss.item()
        if not np.isfinite(value):
            raise NonFiniteError(f"student loss is {value} at epoch {epoch + 1}, step {step}")
        self.optimizer.zero_grad()
        backward(loss, tape)
        self.optimizer.step()
        return value

    def fit(
        self,
        train_windows: Sequence[TimeSeriesWindow],
        val_windows: Sequence[TimeSeriesWindow] = (),
    ) -> TrainingHistory:
        hyper = self.hyper
        history = TrainingHistory()
        stopper = EarlyStopping(hyper.patience, [self.student])
        logger.info(
            f"Distilling into student on {len(train_windows)} windows "
            f"(lambda_p={hyper.lambda_p}, lambda_c={hyper.lambda_c}, lambda_e={hyper.lambda_e})"
        )
        for epoch in range(hyper.epochs):
            self.student.train()
            order = self.rng.permutation(len(train_windows))
            losses = []
            for start in range(0, len(order), hyper.batch_size):
                positions = order[start : start + hyper.batch_size]
                a_pe = e_gt = None
                if hyper.distills:
                    a_pe, e_gt = self.teacher_signals(positions, order[start:])
                batch = [train_windows[int(i)] for i in positions]
                losses.append(self.train_step(batch, a_pe, e_gt, epoch, history.steps))
                history.steps += 1
                if hyper.max_steps and history.steps >= hyper.max_steps:
                    break
            train_loss = float(np.mean(losses))
            val_loss = (
                forecast_validation_loss(self.student, val_windows, hyper.batch_size)
                if val_windows
                else train_loss
            )
            history.train_losses.append(train_loss)
            history.val_losses.append(val_loss)
            logger.info(
                f"Student epoch {epoch + 1}/{hyper.epochs}: "
                f"train={train_loss:.6f} val={val_loss:.6f}"
            )
            if stopper.update(epoch, val_loss):
                history.stopped_early = True
                logger.info(f"Student early stop after epoch {epoch + 1}")
                break
            if hyper.max_steps and history.steps >= hyper.max_steps:
                break
        stopper.restore()
        history.best_epoch = stopper.best_epoch
        history.best_val_loss = stopper.best_loss
        self.student.eval()
        return history


class JointTrainer:
    """Minimizes reconstruction, distillation and forecasting in one loop."""

    def __init__(
        self,
        teacher: CrossModalityTeacher,
        student: TimeSeriesStudent,
        hyper: HyperParams,
    ):
        self.teacher = teacher
        self.student = student
        self.hyper = hyper
        self.teacher_optimizer = AdamW(teacher.parameters(trainable_only=True), hyper.adamw())
        self.student_optimizer = AdamW(student.parameters(trainable_only=True), hyper.adamw())
        self.rng = np.random.default_rng(hyper.seed)

    def train_step(
        self,
        store: EmbeddingStore,
        positions: np.ndarray,
        windows: Sequence[TimeSeriesWindow],
        epoch: int = 0,
        step: int = 0,
    ) -> float:
        l_gt, l_hd, targets = store.batch(positions)
        with Tape() as tape:
            teacher_output = self.teacher(l_gt, l_hd)
            l_recon = reconstruction_loss(teacher_output.x_hat, targets)
            student_output = self.student(stack_histories(windows))
            loss, _ = student_objective(
                self.student,
                student_output,
                targets,
                self.hyper,
                a_pe=teacher_output.a_pe,
                e_gt=teacher_output.e_gt,
                l_recon=l_recon,
            )
        value = loss.item()
        if not np.isfinite(value):
            raise NonFiniteError(f"joint loss is {value} at epoch {epoch + 1}, step {step}")
        self.teacher_optimizer.zero_grad()
        self.student_optimizer.zero_grad()
        backward(loss, tape)
        self.teacher_optimizer.step()
        self.student_optimizer.step()
        return value

    def fit(
        self,
        train_store: EmbeddingStore,
        train_windows: Sequence[TimeSeriesWindow],
        val_windows: Sequence[TimeSeriesWindow] = (),
    ) -> TrainingHistory:
        if len(train_store) != len(train_windows):
            raise ContractError("embedding store and windows must be aligned")
        hyper = self.hyper
        history = TrainingHistory()
        stopper = EarlyStopping(hyper.patience, [self.teacher, self.student])
        logger.info(f"Joint training on {len(train_windows)} windows")
        for epoch in range(hyper.epochs):
            self.teacher.train()
            self.student.train()
            losses = []
            for positions in train_store.batches(hyper.batch_size, self.rng):
                batch = [train_windows[int(i)] for i in positions]
                losses.append(self.train_step(train_store, positions, batch, epoch, history.steps))
                history.steps += 1
                if hyper.max_steps and history.steps >= hyper.max_steps:
                    break
            train_loss = float(np.mean(losses))
            val_loss = (
                forecast_validation_loss(self.student, val_windows, hyper.batch_size)
                if val_windows
                else train_loss
            )
            history.train_losses.append(train_loss)
            history.val_losses.append(val_loss)
            logger.info(
                f"Joint epoch {epoch + 1}/{hyper.epochs}: train={train_loss:.6f} val={val_loss:.6f}"
            )
            if stopper.update(epoch, val_loss):
                history.stopped_early = True
                logger.info(f"Joint early stop after epoch {epoch + 1}")
                break
            if hyper.max_steps and history.steps >= hyper.max_steps:
                break
        stopper.restore()
        history.best_epoch = stopper.best_epoch
        history.best_val_loss = stopper.best_loss
        self.teacher.eval()
        self.student.eval()
        return history
