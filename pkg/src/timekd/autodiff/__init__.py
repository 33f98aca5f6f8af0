"""
Autodiff package - numpy tensors, the gradient tape and the optimizer.
"""

from .optim import AdamW, AdamWConfig, AdamWState, optimizer_step
from .tensor import (
    MASK_VALUE,
    Tape,
    Tensor,
    backward,
    default_dtype,
    dropout,
    layer_norm,
    matmul,
    precision,
    relu,
    set_default_dtype,
    smooth_l1,
    softmax_rows,
)

__all__ = [
    "MASK_VALUE",
    "AdamW",
    "AdamWConfig",
    "AdamWState",
    "Tape",
    "Tensor",
    "backward",
    "default_dtype",
    "dropout",
    "layer_norm",
    "matmul",
    "optimizer_step",
    "precision",
    "relu",
    "set_default_dtype",
    "smooth_l1",
    "softmax_rows",
]
