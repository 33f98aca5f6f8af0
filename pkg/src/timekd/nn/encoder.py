"""
Pre-LayerNorm Transformer blocks and the variable-token encoder.

The same ``VariableEncoder`` serves the teacher's privileged Transformer and
the student's time series Transformer: tokens are variables, and attention
is computed between them.
"""

import numpy as np

from ..autodiff.tensor import Tensor
from ..errors import ContractError
from .attention import MultiHeadAttention
from .layers import Dropout, FeedForward, LayerNorm, child_rng
from .module import Module


class PreLNBlock(Module):
    """``x + Drop(Attn(LN(x)))`` then ``x + Drop(FFN(LN(x)))``."""

    def __init__(
        self,
        width: int,
        num_heads: int,
        ffn_dim: int,
        dropout: float,
        rng: np.random.Generator,
    ):
        self.attention_norm = LayerNorm(width)
        self.attention = MultiHeadAttention(width, num_heads, rng)
        self.ffn_norm = LayerNorm(width)
        self.ffn = FeedForward(width, ffn_dim, rng)
        self.dropout = Dropout(dropout, child_rng(rng))

    def forward(self, x: Tensor, mask: np.ndarray | None = None) -> tuple[Tensor, Tensor]:
        attended, weights = self.attention(self.attention_norm(x), mask)
        x = x + self.dropout(attended)
        x = x + self.dropout(self.ffn(self.ffn_norm(x)))
        return x, weights


class VariableEncoder(Module):
    """Stack of pre-LN blocks over variable tokens.

    Returns the encoded tokens and the last layer's head-averaged attention
    map, shape (..., N, N).
    """

    def __init__(
        self,
        width: int,
        num_layers: int,
        num_heads: int,
        ffn_dim: int,
        dropout: float,
        rng: np.random.Generator,
    ):
        if num_layers < 1:
            raise ContractError("encoder needs at least one layer")
        self.layers = [
            PreLNBlock(width, num_heads, ffn_dim, dropout, rng) for _ in range(num_layers)
        ]

    @staticmethod
    def parameter_count(width: int, num_layers: int, ffn_dim: int) -> int:
        attention = 4 * (width * width + width)
        norms = 2 * 2 * width
        ffn = width * ffn_dim + ffn_dim + ffn_dim * width + width
        return num_layers * (attention + norms + ffn)

    def forward(self, x: Tensor) -> tuple[Tensor, Tensor]:
        weights = None
        for layer in self.layers:
            x, weights = layer(x)
        return x, weights.mean(axis=-3)
