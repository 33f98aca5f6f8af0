"""
AdamW optimizer with decoupled weight decay.
"""

import logging
from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..errors import NonFiniteError, ShapeError
from .tensor import Tensor

logger = logging.getLogger(__name__)


class AdamWConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    learning_rate: float = Field(default=1e-3, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)
    weight_decay: float = Field(default=0.0, ge=0)


class AdamWState:
    """First and second moment estimates plus the shared step counter."""

    def __init__(self, params: Sequence[Tensor]):
        self.step = 0
        self.first_moment = [np.zeros_like(p.data) for p in params]
        self.second_moment = [np.zeros_like(p.data) for p in params]


def optimizer_step(
    params: Sequence[Tensor],
    grads: Sequence[np.ndarray | None],
    state: AdamWState,
    config: AdamWConfig,
) -> None:
    """Apply one AdamW update in place.

    Weight decay is applied to the parameter before the bias-corrected Adam
    step. A missing gradient counts as zero.
    """
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ShapeError(
            f"{len(params)} params, {len(grads)} grads, "
            f"{len(state.first_moment)} state slots"
        )
    resolved = []
    for param, grad in zip(params, grads, strict=True):
        grad = np.zeros_like(param.data) if grad is None else grad
        if grad.shape != param.shape:
            raise ShapeError(f"gradient {grad.shape} for parameter {param.shape}")
        if not np.all(np.isfinite(grad)):
            raise NonFiniteError(
                f"non-finite gradient for parameter {param.name or param.shape}"
            )
        resolved.append(grad)

    state.step += 1
    b1, b2 = config.beta1, config.beta2
    correction1 = 1.0 - b1**state.step
    correction2 = 1.0 - b2**state.step
    lr = config.learning_rate

    for param, grad, m, v in zip(
        params, resolved, state.first_moment, state.second_moment, strict=True
    ):
        if config.weight_decay:
            param.data -= lr * config.weight_decay * param.data
        m *= b1
        m += (1.0 - b1) * grad
        v *= b2
        v += (1.0 - b2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        param.data -= lr * m_hat / (np.sqrt(v_hat) + config.eps)
        if not np.all(np.isfinite(param.data)):
            raise NonFiniteError(
                f"parameter {param.name or param.shape} became non-finite"
            )


class AdamW:
    """Stateful wrapper around ``optimizer_step`` for a fixed parameter list."""

    def __init__(self, params: Sequence[Tensor], config: AdamWConfig | None = None):
        self.params = [p for p in params if p.requires_grad]
        self.config = config or AdamWConfig()
        self.state = AdamWState(self.params)
        logger.debug(
            f"AdamW over {len(self.params)} tensors, lr={self.config.learning_rate}"
        )

    def zero_grad(self) -> None:
        for param in self.params:
            param.zero_grad()

    def step(self) -> None:
        optimizer_step(
            self.params, [p.grad for p in self.params], self.state, self.config
        )
