"""
Neural network package - modules, layers, attention and the variable encoder.
"""

from .attention import MultiHeadAttention
from .encoder import PreLNBlock, VariableEncoder
from .layers import Dropout, FeedForward, LayerNorm, Linear, child_rng
from .module import Module, Parameter

__all__ = [
    "Dropout",
    "FeedForward",
    "LayerNorm",
    "Linear",
    "Module",
    "MultiHeadAttention",
    "Parameter",
    "PreLNBlock",
    "VariableEncoder",
    "child_rng",
]
