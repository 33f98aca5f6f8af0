"""
Subtractive cross attention between ground-truth and history embeddings.

A channel-by-channel similarity between the two embeddings selects the part
of the ground-truth embedding explained by the history; that part is
projected and subtracted, leaving what only the future reveals.
"""

import numpy as np

from ..autodiff.tensor import Tensor, softmax_rows
from ..errors import ShapeError
from ..nn.layers import FeedForward, LayerNorm, Linear
from ..nn.module import Module


class SubtractiveCrossAttention(Module):
    def __init__(self, width: int, ffn_ratio: int, rng: np.random.Generator):
        self.query = Linear(width, width, rng)
        self.key = Linear(width, width, rng)
        self.value = Linear(width, width, rng)
        self.channel_projection = Linear(width, width, rng)
        self.query_norm = LayerNorm(width)
        self.key_norm = LayerNorm(width)
        self.output_norm = LayerNorm(width)
        self.ffn = FeedForward(width, width * ffn_ratio, rng)

    @staticmethod
    def parameter_count(width: int, ffn_ratio: int) -> int:
        hidden = width * ffn_ratio
        return (
            4 * (width * width + width)
            + 3 * 2 * width
            + width * hidden + hidden + hidden * width + width
        )

    def channel_similarity(self, l_gt: Tensor, l_hd: Tensor) -> Tensor:
        """Row-stochastic (..., D, D) similarity between embedding channels."""
        if l_gt.shape != l_hd.shape:
            raise ShapeError(f"embedding shapes differ: {l_gt.shape} vs {l_hd.shape}")
        q = self.query_norm(self.query(l_gt))
        k = self.key_norm(self.key(l_hd))
        return softmax_rows(q.swapaxes(-1, -2) @ k)

    def subtractive_refine(self, l_gt: Tensor, l_hd: Tensor, similarity: Tensor) -> Tensor:
        shared = self.channel_projection(self.value(l_hd) @ similarity)
        return self.ffn(self.output_norm(l_gt - shared))

    def forward(self, l_gt: Tensor, l_hd: Tensor) -> Tensor:
        return self.subtractive_refine(l_gt, l_hd, self.channel_similarity(l_gt, l_hd))
