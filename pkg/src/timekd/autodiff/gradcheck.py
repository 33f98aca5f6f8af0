"""
Finite-difference gradient checks.
"""

from collections.abc import Callable, Sequence

import numpy as np

from .tensor import Tensor, Tape, backward

DEFAULT_STEP = 1e-5


def numerical_gradient(
    fn: Callable[[], Tensor], tensor: Tensor, step: float = DEFAULT_STEP
) -> np.ndarray:
    """Central differences of the scalar ``fn()`` with respect to ``tensor``."""
    grad = np.zeros(tensor.shape, dtype=np.float64)
    flat = tensor.data.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + step
        upper = fn().item()
        flat[i] = original - step
        lower = fn().item()
        flat[i] = original
        out[i] = (upper - lower) / (2.0 * step)
    return grad


def analytic_gradients(
    fn: Callable[[], Tensor], tensors: Sequence[Tensor]
) -> list[np.ndarray]:
    """Gradients of ``fn()`` for ``tensors`` from a single backward pass."""
    for tensor in tensors:
        tensor.requires_grad = True
        tensor.grad = np.zeros_like(tensor.data)
    with Tape() as tape:
        loss = fn()
    backward(loss, tape)
    return [np.array(t.grad, dtype=np.float64) for t in tensors]


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-4) -> float:
    """Normwise relative error; the floor keeps near-zero gradients comparable."""
    diff = np.linalg.norm(analytic - numeric)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), floor)
    return float(diff / scale)


def check_gradients(
    fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    step: float = DEFAULT_STEP,
) -> float:
    """Worst relative error between analytic and numeric gradients."""
    analytic = analytic_gradients(fn, tensors)
    errors = [
        relative_error(a, numerical_gradient(fn, t, step))
        for a, t in zip(analytic, tensors, strict=True)
    ]
    return max(errors, default=0.0)
