"""
Multi-head scaled dot-product attention with an optional additive mask.
"""

import math

import numpy as np

from ..autodiff.tensor import Tensor, softmax_rows
from ..errors import ContractError, ShapeError
from .layers import Linear
from .module import Module


class MultiHeadAttention(Module):
    """Self-attention over the second-to-last axis.

    ``forward`` returns the projected output and the per-head attention
    weights of shape (..., heads, S, S).
    """

    def __init__(self, width: int, num_heads: int, rng: np.random.Generator):
        if num_heads < 1 or width % num_heads:
            raise ContractError(f"width {width} is not divisible by {num_heads} heads")
        self.num_heads = num_heads
        self.head_dim = width // num_heads
        self.query = Linear(width, width, rng)
        self.key = Linear(width, width, rng)
        self.value = Linear(width, width, rng)
        self.output = Linear(width, width, rng)

    def _split_heads(self, x: Tensor) -> Tensor:
        *lead, seq, width = x.shape
        return x.reshape(*lead, seq, self.num_heads, self.head_dim).swapaxes(-3, -2)

    def _merge_heads(self, x: Tensor) -> Tensor:
        *lead, _, seq, _ = x.shape
        return x.swapaxes(-3, -2).reshape(*lead, seq, self.num_heads * self.head_dim)

    def forward(self, x: Tensor, mask: np.ndarray | None = None) -> tuple[Tensor, Tensor]:
        seq = x.shape[-2]
        q = self._split_heads(self.query(x))
        k = self._split_heads(self.key(x))
        v = self._split_heads(self.value(x))

        scores = (q @ k.swapaxes(-1, -2)) * (1.0 / math.sqrt(self.head_dim))
        if mask is not None:
            if mask.shape[-2:] != (seq, seq):
                raise ShapeError(f"mask {mask.shape} does not fit sequence {seq}")
            # insert the head axis
            scores = scores + Tensor(mask[..., None, :, :], dtype=x.dtype)
        weights = softmax_rows(scores)
        return self.output(self._merge_heads(weights @ v)), weights
