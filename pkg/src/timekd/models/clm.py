"""
Calibrated language model: a frozen causal Transformer over tagged tokens.

Attention between a text token and a time series token is penalized by a
constant ``delta`` added to the pre-softmax score, so each modality attends
mostly within itself.
"""

import logging
import math
from collections.abc import Sequence
from pathlib import Path
from typing import ClassVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..autodiff.tensor import MASK_VALUE, Tensor, default_dtype
from ..errors import ConfigError, ContractError, LengthError
from ..managers.checkpoints import WEIGHTS_MAGIC, CheckpointManager
from ..nn.attention import MultiHeadAttention
from ..nn.encoder import PreLNBlock
from ..nn.layers import INIT_STD
from ..nn.module import Module, Parameter
from ..prompts.tokenizer import Modality, TaggedTokenSequence, pad_batch

logger = logging.getLogger(__name__)

DEFAULT_DELTA = math.log(10.0)


class ClmConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    vocab_size: int = Field(..., gt=2)
    hidden_dim: int = Field(default=64, gt=0)
    num_layers: int = Field(default=12, ge=0)
    num_heads: int = Field(default=4, gt=0)
    ffn_ratio: int = Field(default=4, gt=0)
    delta: float = Field(default=DEFAULT_DELTA, ge=0)
    max_seq_len: int = Field(default=2048, gt=0)
    seed: int = 0

    @model_validator(mode="after")
    def _check_heads(self) -> "ClmConfig":
        if self.hidden_dim % self.num_heads:
            raise ConfigError(
                f"clm hidden_dim {self.hidden_dim} is not divisible by {self.num_heads} heads"
            )
        return self

    def parameter_count(self) -> int:
        d, f = self.hidden_dim, self.hidden_dim * self.ffn_ratio
        per_layer = 4 * (d * d + d) + 2 * 2 * d + (d * f + f) + (f * d + d)
        return self.vocab_size * d + self.max_seq_len * d + self.num_layers * per_layer


class ClmOutput(BaseModel):
    """Hidden states of a padded batch; ``attentions`` holds one map per layer."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    hidden: np.ndarray
    true_lengths: np.ndarray
    attentions: list[np.ndarray] = Field(default_factory=list)

    def last_token(self) -> np.ndarray:
        return extract_last_token(self.hidden, self.true_lengths)


def _as_series_mask(tags: Sequence[Modality] | np.ndarray) -> np.ndarray:
    if isinstance(tags, np.ndarray) and tags.dtype == bool:
        return tags
    return np.array([Modality(t) is Modality.TIME_SERIES for t in tags], dtype=bool)


def build_mask(
    tags: Sequence[Modality] | np.ndarray,
    true_len: int,
    delta: float,
) -> np.ndarray:
    """Additive (S, S) mask: causal and padding positions get ``MASK_VALUE``,
    cross-modality pairs get ``-delta``, everything else 0."""
    series = _as_series_mask(tags)
    size = series.shape[-1]
    if not 0 < true_len <= size:
        raise ContractError(f"true length {true_len} outside 1..{size}")
    mask = np.where(series[:, None] != series[None, :], -float(delta), 0.0)
    rows, cols = np.indices((size, size))
    mask[(cols > rows) | (cols >= true_len)] = MASK_VALUE
    return mask


def build_masks(series: np.ndarray, true_lengths: np.ndarray, delta: float) -> np.ndarray:
    return np.stack(
        [build_mask(row, int(n), delta) for row, n in zip(series, true_lengths, strict=True)]
    )


def calibrated_attention(
    attention: MultiHeadAttention, x: Tensor, mask: np.ndarray
) -> tuple[Tensor, Tensor]:
    """One masked attention pass; returns output and per-head weights."""
    return attention(x, mask)


def extract_last_token(hidden: np.ndarray, true_lengths: np.ndarray) -> np.ndarray:
    """Hidden state at position ``true_length - 1`` of every row."""
    true_lengths = np.asarray(true_lengths)
    if np.any(true_lengths < 1) or np.any(true_lengths > hidden.shape[-2]):
        raise ContractError(f"true lengths {true_lengths} outside 1..{hidden.shape[-2]}")
    return hidden[np.arange(hidden.shape[0]), true_lengths - 1]


class CalibratedLanguageModel(Module):
    """Frozen token encoder: embeddings, learned positions, pre-LN blocks.

    There is no final normalization; the last-token state is returned raw.
    """

    encode_calls: ClassVar[int] = 0

    def __init__(self, config: ClmConfig):
        self.config = config
        rng = np.random.default_rng(config.seed)
        d = config.hidden_dim
        self.token_embedding = Parameter(
            rng.normal(0.0, INIT_STD, (config.vocab_size, d)), name="token_embedding"
        )
        self.position_embedding = Parameter(
            rng.normal(0.0, INIT_STD, (config.max_seq_len, d)), name="position_embedding"
        )
        self.layers = [
            PreLNBlock(d, config.num_heads, d * config.ffn_ratio, 0.0, rng)
            for _ in range(config.num_layers)
        ]
        self.freeze()
        self.eval()
        logger.info(
            f"Built calibrated LM: {config.num_layers} layers, width {d}, "
            f"delta={config.delta:.4f}, {self.num_parameters()} frozen parameters"
        )

    def encode_ids(
        self,
        ids: np.ndarray,
        series: np.ndarray,
        true_lengths: np.ndarray,
        return_attention: bool = False,
    ) -> ClmOutput:
        """Encode a padded (N, S) batch of token ids."""
        type(self).encode_calls += 1
        seq_len = ids.shape[-1]
        if seq_len > self.config.max_seq_len:
            raise LengthError(
                f"sequence of {seq_len} tokens exceeds max length {self.config.max_seq_len}"
            )
        if ids.size and (ids.min() < 0 or ids.max() >= self.config.vocab_size):
            raise ContractError("token id outside the vocabulary")
        embedded = self.token_embedding.data[ids] + self.position_embedding.data[:seq_len]
        x = Tensor(embedded, dtype=default_dtype())
        masks = build_masks(series, true_lengths, self.config.delta)
        attentions = []
        for layer in self.layers:
            x, weights = layer(x, masks)
            if return_attention:
                attentions.append(weights.data)
        return ClmOutput(
            hidden=x.data, true_lengths=np.asarray(true_lengths), attentions=attentions
        )

    def encode(
        self, sequences: Sequence[TaggedTokenSequence], return_attention: bool = False
    ) -> ClmOutput:
        ids, series, lengths = pad_batch(sequences)
        return self.encode_ids(ids, series, lengths, return_attention)

    def save_weights(self, path: str | Path) -> Path:
        return CheckpointManager(WEIGHTS_MAGIC).save(
            path, self, self.config.model_dump(), precision=str(self.token_embedding.dtype)
        )

    @classmethod
    def from_weights(cls, path: str | Path, config: ClmConfig) -> "CalibratedLanguageModel":
        """Build a model for ``config`` and import externally trained weights."""
        checkpoint = CheckpointManager(WEIGHTS_MAGIC).read(path)
        shape_keys = (
            "vocab_size", "hidden_dim", "num_layers", "num_heads", "ffn_ratio", "max_seq_len"
        )
        mismatched = [k for k in shape_keys if checkpoint.config.get(k) != getattr(config, k)]
        if mismatched:
            raise ConfigError(f"weights at {path} disagree on {', '.join(mismatched)}")
        model = cls(config)
        checkpoint.load_into(model)
        model.freeze()
        return model


def clm_encode(model: CalibratedLanguageModel, sequence: TaggedTokenSequence) -> np.ndarray:
    """(S, D) hidden states for a single sequence."""
    return model.encode([sequence]).hidden[0]
