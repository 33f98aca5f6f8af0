"""
Cross-modality teacher: refines prompt embeddings with subtractive cross
attention, encodes them with the privileged Transformer and reconstructs
the future window.
"""

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..autodiff.tensor import Tensor
from ..errors import ConfigError, ShapeError
from ..nn.encoder import VariableEncoder
from ..nn.layers import Linear
from ..nn.module import Module
from .sca import SubtractiveCrossAttention

logger = logging.getLogger(__name__)


class TeacherConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    history: int = Field(..., ge=2)
    horizon: int = Field(..., ge=1)
    llm_dim: int = Field(default=64, gt=0, description="width of the prompt embeddings")
    model_dim: int = Field(default=64, gt=0)
    num_layers: int = Field(default=2, ge=1)
    num_heads: int = Field(default=4, gt=0)
    ffn_ratio: int = Field(default=4, gt=0)
    dropout: float = Field(default=0.1, ge=0, lt=1)
    use_clm: bool = True
    use_sca: bool = True
    privileged: bool = True
    seed: int = 0

    @model_validator(mode="after")
    def _check_heads(self) -> "TeacherConfig":
        if self.model_dim % self.num_heads:
            raise ConfigError(
                f"model_dim {self.model_dim} is not divisible by {self.num_heads} heads"
            )
        return self

    @property
    def history_input_dim(self) -> int:
        return self.llm_dim if self.use_clm else self.history

    @property
    def groundtruth_input_dim(self) -> int:
        if self.use_clm:
            return self.llm_dim
        return self.history + self.horizon if self.privileged else self.history

    def parameter_count(self) -> int:
        d, m = self.llm_dim, self.model_dim
        count = 0
        if not self.use_clm:
            count += (self.history + 1) * d + (self.groundtruth_input_dim + 1) * d
        if self.use_sca:
            count += SubtractiveCrossAttention.parameter_count(d, self.ffn_ratio)
        count += d * m + m
        count += VariableEncoder.parameter_count(m, self.num_layers, m * self.ffn_ratio)
        count += m * self.horizon + self.horizon
        return count


class TeacherOutput(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    refined: Tensor = Field(..., description="(..., N, D) refined embedding")
    e_gt: Tensor = Field(..., description="(..., N, D_m) privileged features")
    a_pe: Tensor = Field(..., description="(..., N, N) privileged correlations")
    x_hat: Tensor = Field(..., description="(..., G, N) normalized reconstruction")


class CrossModalityTeacher(Module):
    def __init__(self, config: TeacherConfig):
        self.config = config
        rng = np.random.default_rng(config.seed)
        if not config.use_clm:
            self.history_embedding = Linear(config.history, config.llm_dim, rng)
            self.groundtruth_embedding = Linear(
                config.groundtruth_input_dim, config.llm_dim, rng
            )
        self.sca = (
            SubtractiveCrossAttention(config.llm_dim, config.ffn_ratio, rng)
            if config.use_sca
            else None
        )
        self.input_projection = Linear(config.llm_dim, config.model_dim, rng)
        self.encoder = VariableEncoder(
            config.model_dim,
            config.num_layers,
            config.num_heads,
            config.model_dim * config.ffn_ratio,
            config.dropout,
            rng,
        )
        self.head = Linear(config.model_dim, config.horizon, rng)
        logger.debug(f"Teacher built with {self.num_parameters()} parameters")

    def embed(self, l_gt: np.ndarray, l_hd: np.ndarray) -> tuple[Tensor, Tensor]:
        """Lift raw inputs to (..., N, D) embeddings.

        With the language model the inputs already are embeddings; otherwise
        they are normalized value vectors mapped through linear embeddings.
        """
        expected = (self.config.groundtruth_input_dim, self.config.history_input_dim)
        if (l_gt.shape[-1], l_hd.shape[-1]) != expected:
            raise ShapeError(
                f"teacher expects inputs of width {expected}, "
                f"got {(l_gt.shape[-1], l_hd.shape[-1])}"
            )
        gt, hd = Tensor(l_gt), Tensor(l_hd)
        if self.config.use_clm:
            return gt, hd
        return self.groundtruth_embedding(gt), self.history_embedding(hd)

    def refine(self, l_gt: Tensor, l_hd: Tensor) -> Tensor:
        if self.sca is None:
            if l_gt.shape != l_hd.shape:
                raise ShapeError(f"embedding shapes differ: {l_gt.shape} vs {l_hd.shape}")
            return l_gt - l_hd
        return self.sca(l_gt, l_hd)

    def pt_encode(self, refined: Tensor) -> tuple[Tensor, Tensor]:
        """Privileged Transformer: returns features E_GT and correlations A_PE."""
        return self.encoder(self.input_projection(refined))

    def reconstruct(self, e_gt: Tensor) -> Tensor:
        return self.head(e_gt).swapaxes(-1, -2)

    def forward(self, l_gt: np.ndarray, l_hd: np.ndarray) -> TeacherOutput:
        gt, hd = self.embed(l_gt, l_hd)
        refined = self.refine(gt, hd)
        e_gt, a_pe = self.pt_encode(refined)
        return TeacherOutput(refined=refined, e_gt=e_gt, a_pe=a_pe, x_hat=self.reconstruct(e_gt))
