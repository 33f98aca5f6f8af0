"""
Parameter containers.

A ``Module`` discovers its parameters by walking its attributes in assignment
order, so the order of ``named_parameters`` is the order fields are set in
``__init__``. Checkpoints and checksums rely on that order.
"""

import hashlib
from collections.abc import Iterator, Sequence

import numpy as np

from ..autodiff.tensor import Tensor
from ..errors import ShapeError


class Parameter(Tensor):
    """A trainable leaf tensor."""

    __slots__ = ()

    def __init__(self, data, requires_grad: bool = True, dtype=None, name=None):
        super().__init__(data, requires_grad=requires_grad, dtype=dtype, name=name)


class Module:
    training: bool = True

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for name, value in vars(self).items():
            if isinstance(value, Parameter):
                yield f"{prefix}{name}", value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{prefix}{name}.")
            elif isinstance(value, list | tuple):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{prefix}{name}.{i}.")

    def parameters(self, trainable_only: bool = False) -> list[Parameter]:
        return [
            p
            for _, p in self.named_parameters()
            if p.requires_grad or not trainable_only
        ]

    def children(self) -> Iterator["Module"]:
        for value in vars(self).values():
            if isinstance(value, Module):
                yield value
            elif isinstance(value, list | tuple):
                yield from (item for item in value if isinstance(item, Module))

    def train(self, mode: bool = True) -> "Module":
        self.training = mode
        for child in self.children():
            child.train(mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def freeze(self) -> "Module":
        for param in self.parameters():
            param.requires_grad = False
            param.grad = None
        return self

    def zero_grad(self) -> None:
        for param in self.parameters(trainable_only=True):
            param.zero_grad()

    def num_parameters(self, trainable_only: bool = False) -> int:
        return sum(p.data.size for p in self.parameters(trainable_only))

    def checksum(self) -> str:
        """SHA-256 over parameter names, shapes and raw bytes."""
        digest = hashlib.sha256()
        for name, param in self.named_parameters():
            digest.update(name.encode())
            digest.update(str(param.shape).encode())
            digest.update(np.ascontiguousarray(param.data).tobytes())
        return digest.hexdigest()

    def state_arrays(self) -> list[np.ndarray]:
        return [p.data.copy() for p in self.parameters()]

    def load_state_arrays(self, arrays: Sequence[np.ndarray]) -> None:
        params = self.parameters()
        if len(arrays) != len(params):
            raise ShapeError(f"expected {len(params)} arrays, got {len(arrays)}")
        for param, array in zip(params, arrays, strict=True):
            if array.shape != param.shape:
                raise ShapeError(
                    f"parameter {param.name} has shape {param.shape}, got {array.shape}"
                )
            param.data = np.array(array, dtype=param.dtype)

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError
