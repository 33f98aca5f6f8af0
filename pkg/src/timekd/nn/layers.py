"""
Dense building blocks: affine maps, layer normalization, feed-forward and dropout.
"""

import numpy as np

from ..autodiff.tensor import Tensor, default_dtype, dropout, layer_norm, relu
from .module import Module, Parameter

INIT_STD = 0.02


def child_rng(rng: np.random.Generator) -> np.random.Generator:
    """Independent generator derived deterministically from ``rng``."""
    return np.random.default_rng(int(rng.integers(0, 2**32)))


class Linear(Module):
    """``x @ weight + bias`` with weight stored as (in_features, out_features)."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        self.weight = Parameter(
            rng.normal(0.0, INIT_STD, (in_features, out_features)), name="weight"
        )
        self.bias = Parameter(np.zeros(out_features), name="bias")

    @property
    def in_features(self) -> int:
        return self.weight.shape[0]

    @property
    def out_features(self) -> int:
        return self.weight.shape[1]

    def forward(self, x: Tensor) -> Tensor:
        return x @ self.weight + self.bias


class LayerNorm(Module):
    def __init__(self, width: int, eps: float = 1e-5):
        self.gamma = Parameter(np.ones(width, dtype=default_dtype()), name="gamma")
        self.beta = Parameter(np.zeros(width, dtype=default_dtype()), name="beta")
        self.eps = eps

    def forward(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gamma, self.beta, self.eps)


class FeedForward(Module):
    """Two affine maps with a ReLU in between."""

    def __init__(self, width: int, hidden: int, rng: np.random.Generator):
        self.expand = Linear(width, hidden, rng)
        self.contract = Linear(hidden, width, rng)

    def forward(self, x: Tensor) -> Tensor:
        return self.contract(relu(self.expand(x)))


class Dropout(Module):
    def __init__(self, rate: float, rng: np.random.Generator):
        self.rate = rate
        self.rng = rng

    def forward(self, x: Tensor) -> Tensor:
        if not self.training or self.rate <= 0.0:
            return x
        return dropout(x, self.rate, self.rng)
