"""
Dense tensors with tape-based reverse-mode differentiation.

Values live in row-major numpy arrays. Operations executed while a ``Tape`` is
active and with at least one input that requires a gradient are recorded
together with a vector-Jacobian closure; ``backward`` replays the tape in
reverse order.
"""

import contextlib
import contextvars
import logging
from collections.abc import Callable, Iterator, Sequence

import numpy as np

from ..errors import ContractError, DegenerateRowError, ShapeError

logger = logging.getLogger(__name__)

# Additive surrogate for -inf in attention masks.
MASK_VALUE = -1e30
_MASKED_THRESHOLD = -1e29

_default_dtype: contextvars.ContextVar[np.dtype] = contextvars.ContextVar(
    "timekd_default_dtype", default=np.dtype(np.float32)
)
_active_tape: contextvars.ContextVar["Tape | None"] = contextvars.ContextVar(
    "timekd_active_tape", default=None
)


def default_dtype() -> np.dtype:
    """Precision used for newly created tensors."""
    return _default_dtype.get()


def set_default_dtype(dtype: type | str | np.dtype) -> None:
    _default_dtype.set(np.dtype(dtype))


@contextlib.contextmanager
def precision(dtype: type | str | np.dtype) -> Iterator[np.dtype]:
    """Temporarily switch the default precision (float32 or float64)."""
    token = _default_dtype.set(np.dtype(dtype))
    try:
        yield _default_dtype.get()
    finally:
        _default_dtype.reset(token)


class Tensor:
    """A dense array that may take part in reverse-mode differentiation."""

    __slots__ = ("data", "requires_grad", "grad", "name")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        dtype: type | str | np.dtype | None = None,
        name: str | None = None,
    ):
        self.data = np.array(
            data, dtype=default_dtype() if dtype is None else dtype
        )
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = (
            np.zeros_like(self.data) if requires_grad else None
        )
        self.name = name

    @classmethod
    def _wrap(cls, data: np.ndarray) -> "Tensor":
        out = cls.__new__(Tensor)
        out.data = data
        out.requires_grad = False
        out.grad = None
        out.name = None
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def T(self) -> "Tensor":
        return swapaxes(self, -1, -2)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor._wrap(self.data)

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    def __add__(self, other) -> "Tensor":
        return add(self, other)

    def __radd__(self, other) -> "Tensor":
        return add(other, self)

    def __sub__(self, other) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other) -> "Tensor":
        return mul(other, self)

    def __truediv__(self, other) -> "Tensor":
        return div(self, other)

    def __neg__(self) -> "Tensor":
        return neg(self)

    def __matmul__(self, other) -> "Tensor":
        return matmul(self, other)

    def swapaxes(self, axis1: int, axis2: int) -> "Tensor":
        return swapaxes(self, axis1, axis2)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], tuple | list):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return mean(self, axis=axis, keepdims=keepdims)

    def relu(self) -> "Tensor":
        return relu(self)


VJP = Callable[[np.ndarray], Sequence[np.ndarray | None]]


class Node:
    """One recorded operation: inputs, output and its vector-Jacobian product."""

    __slots__ = ("op", "inputs", "output", "vjp")

    def __init__(self, op: str, inputs: tuple[Tensor, ...], output: Tensor, vjp: VJP):
        self.op = op
        self.inputs = inputs
        self.output = output
        self.vjp = vjp


class Tape:
    """Ordered record of differentiable operations.

    Use as a context manager; operations run inside the block are recorded.
    """

    def __init__(self):
        self.nodes: list[Node] = []
        self._outputs: set[int] = set()
        self._tokens: list[contextvars.Token] = []

    def __enter__(self) -> "Tape":
        self._tokens.append(_active_tape.set(self))
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _active_tape.reset(self._tokens.pop())

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, op: str, inputs: tuple[Tensor, ...], output: Tensor, vjp: VJP):
        self.nodes.append(Node(op, inputs, output, vjp))
        self._outputs.add(id(output))

    def produced(self, tensor: Tensor) -> bool:
        return id(tensor) in self._outputs

    def backward(self, loss: Tensor) -> list[Tensor]:
        return backward(loss, self)


def _lift(value, like: Tensor | None = None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value, dtype=None if like is None else like.dtype)


def _result(op: str, data: np.ndarray, inputs: tuple[Tensor, ...], vjp: VJP) -> Tensor:
    out = Tensor._wrap(data)
    tape = _active_tape.get()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.record(op, inputs, out, vjp)
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(
        i for i, size in enumerate(shape) if size == 1 and grad.shape[i] != 1
    )
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def backward(loss: Tensor, tape: Tape) -> list[Tensor]:
    """Accumulate d(loss)/d(leaf) into ``.grad`` of every reachable leaf.

    Returns the leaves that received a gradient. Gradients accumulate across
    calls until ``zero_grad`` is called.
    """
    if loss.data.size != 1:
        raise ContractError(
            f"backward needs a scalar root, got shape {loss.shape}"
        )
    if not tape.produced(loss):
        raise ContractError("loss was not produced on this tape")

    pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    leaves: dict[int, Tensor] = {}

    for node in reversed(tape.nodes):
        upstream = pending.pop(id(node.output), None)
        if upstream is None:
            continue
        for tensor, grad in zip(node.inputs, node.vjp(upstream), strict=True):
            if grad is None or not tensor.requires_grad:
                continue
            grad = _unbroadcast(np.asarray(grad), tensor.shape).astype(
                tensor.dtype, copy=False
            )
            key = id(tensor)
            if tape.produced(tensor):
                pending[key] = pending[key] + grad if key in pending else grad
            else:
                leaves[key] = tensor
                if tensor.grad is None:
                    tensor.grad = np.array(grad)
                else:
                    tensor.grad = tensor.grad + grad

    logger.debug(f"Backward pass over {len(tape)} nodes reached {len(leaves)} leaves")
    return list(leaves.values())


def add(a, b) -> Tensor:
    a = _lift(a, b if isinstance(b, Tensor) else None)
    b = _lift(b, a)
    return _result("add", a.data + b.data, (a, b), lambda g: (g, g))


def sub(a, b) -> Tensor:
    a = _lift(a, b if isinstance(b, Tensor) else None)
    b = _lift(b, a)
    return _result("sub", a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a, b) -> Tensor:
    a = _lift(a, b if isinstance(b, Tensor) else None)
    b = _lift(b, a)
    return _result(
        "mul", a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data)
    )


def div(a, b) -> Tensor:
    a = _lift(a, b if isinstance(b, Tensor) else None)
    b = _lift(b, a)
    out = a.data / b.data
    return _result(
        "div", out, (a, b), lambda g: (g / b.data, -g * out / b.data)
    )


def neg(a: Tensor) -> Tensor:
    return _result("neg", -a.data, (a,), lambda g: (-g,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes, leading axes broadcast."""
    a = _lift(a)
    b = _lift(b, a)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")

    def vjp(g):
        return (
            g @ np.swapaxes(b.data, -1, -2),
            np.swapaxes(a.data, -1, -2) @ g,
        )

    return _result("matmul", a.data @ b.data, (a, b), vjp)


def swapaxes(a: Tensor, axis1: int, axis2: int) -> Tensor:
    return _result(
        "swapaxes",
        np.swapaxes(a.data, axis1, axis2),
        (a,),
        lambda g: (np.swapaxes(g, axis1, axis2),),
    )


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    return _result(
        "reshape", a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),)
    )


def _expand_reduced(g: np.ndarray, shape, axis, keepdims: bool) -> np.ndarray:
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, shape)


def sum_(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    return _result(
        "sum",
        a.data.sum(axis=axis, keepdims=keepdims),
        (a,),
        lambda g: (_expand_reduced(g, a.shape, axis, keepdims),),
    )


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = a.data.mean(axis=axis, keepdims=keepdims)
    count = a.data.size // max(out.size, 1) if a.data.size else 1
    return _result(
        "mean",
        out,
        (a,),
        lambda g: (_expand_reduced(g, a.shape, axis, keepdims) / count,),
    )


def relu(a: Tensor) -> Tensor:
    active = a.data > 0
    return _result(
        "relu", np.where(active, a.data, 0).astype(a.dtype), (a,), lambda g: (g * active,)
    )


def softmax_rows(x: Tensor) -> Tensor:
    """Softmax over the last axis, stabilized by max subtraction.

    Rows whose entries are all masked (at or below the mask surrogate) raise
    ``DegenerateRowError``.
    """
    if x.ndim == 0 or x.shape[-1] < 1:
        raise ShapeError(f"softmax needs a non-empty last axis, got {x.shape}")
    row_max = x.data.max(axis=-1, keepdims=True)
    if np.any(row_max <= _MASKED_THRESHOLD):
        raise DegenerateRowError("softmax row has no permitted entry")
    exp = np.exp(x.data - row_max)
    out = exp / exp.sum(axis=-1, keepdims=True)

    def vjp(g):
        return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

    return _result("softmax_rows", out, (x,), vjp)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis with population variance, then scale and shift."""
    if x.shape[-1] < 1 or gamma.shape != (x.shape[-1],) or beta.shape != gamma.shape:
        raise ShapeError(
            f"layer_norm got x {x.shape}, gamma {gamma.shape}, beta {beta.shape}"
        )
    centered = x.data - x.data.mean(axis=-1, keepdims=True)
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = centered * inv_std
    out = x_hat * gamma.data + beta.data

    def vjp(g):
        g_hat = g * gamma.data
        gx = inv_std * (
            g_hat
            - g_hat.mean(axis=-1, keepdims=True)
            - x_hat * (g_hat * x_hat).mean(axis=-1, keepdims=True)
        )
        return gx, g * x_hat, g

    return _result("layer_norm", out.astype(x.dtype, copy=False), (x, gamma, beta), vjp)


def smooth_l1(pred: Tensor, target) -> Tensor:
    """Mean SmoothL1 over all elements (quadratic below |d| = 1, linear above)."""
    target = _lift(target, pred)
    if pred.shape != target.shape:
        raise ShapeError(f"smooth_l1 shapes differ: {pred.shape} vs {target.shape}")
    diff = pred.data - target.data
    magnitude = np.abs(diff)
    quadratic = magnitude < 1.0
    elementwise = np.where(quadratic, 0.5 * diff * diff, magnitude - 0.5)
    count = max(diff.size, 1)
    out = np.asarray(elementwise.mean() if diff.size else 0.0, dtype=pred.dtype)

    def vjp(g):
        local = np.where(quadratic, diff, np.sign(diff)) * (g / count)
        return local, -local

    return _result("smooth_l1", out, (pred, target), vjp)


def dropout(x: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; the caller decides whether it is active."""
    if rate <= 0.0:
        return x
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return mul(x, Tensor._wrap(keep))
