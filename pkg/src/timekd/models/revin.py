"""
Reversible instance normalization over the history axis.
"""

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..autodiff.tensor import Tensor, default_dtype
from ..data.windows import STATS_EPS, window_stats
from ..errors import ContractError
from ..nn.module import Module, Parameter


class RevinStats(BaseModel):
    """Per-instance statistics, shaped (..., 1, N) for broadcasting."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    mean: np.ndarray
    std: np.ndarray


def revin_stats(x_h: np.ndarray, eps: float = STATS_EPS) -> RevinStats:
    if x_h.shape[-2] < 2:
        raise ContractError(f"history length must be at least 2, got {x_h.shape[-2]}")
    mean, std = window_stats(x_h, eps)
    return RevinStats(mean=np.expand_dims(mean, -2), std=np.expand_dims(std, -2))


def revin_normalize(x_h: np.ndarray, eps: float = STATS_EPS) -> tuple[np.ndarray, RevinStats]:
    stats = revin_stats(x_h, eps)
    return (x_h - stats.mean) / stats.std, stats


def revin_denormalize(y: np.ndarray, stats: RevinStats) -> np.ndarray:
    return y * stats.std + stats.mean


class RevIN(Module):
    """Instance normalization with an optional learned per-variable affine map.

    Statistics are constants; gradients only reach the affine parameters.
    """

    def __init__(self, num_variables: int, affine: bool = False, eps: float = STATS_EPS):
        self.eps = eps
        self.affine = affine
        if affine:
            self.affine_weight = Parameter(np.ones(num_variables, dtype=default_dtype()))
            self.affine_bias = Parameter(np.zeros(num_variables, dtype=default_dtype()))

    def normalize(self, x_h: np.ndarray) -> tuple[Tensor, RevinStats]:
        normalized, stats = revin_normalize(x_h, self.eps)
        x = Tensor(normalized)
        if self.affine:
            x = x * self.affine_weight + self.affine_bias
        return x, stats

    def to_standard(self, y: Tensor) -> Tensor:
        """Undo the affine map, leaving values in per-instance standard units."""
        if not self.affine:
            return y
        return (y - self.affine_bias) / (self.affine_weight + self.eps * self.eps)

    def denormalize(self, y: Tensor, stats: RevinStats) -> np.ndarray:
        return revin_denormalize(self.to_standard(y).data.astype(np.float64), stats)
