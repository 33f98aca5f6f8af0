"""
Time series student: RevIN, inverted variable embedding, Transformer encoder
and a linear forecasting head. It never sees prompts or the language model.
"""

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..autodiff.tensor import Tensor
from ..errors import ConfigError, ShapeError
from ..nn.encoder import VariableEncoder
from ..nn.layers import Linear
from ..nn.module import Module
from .revin import RevIN, RevinStats

logger = logging.getLogger(__name__)


class StudentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    history: int = Field(..., ge=2)
    horizon: int = Field(..., ge=1)
    num_variables: int = Field(..., ge=1)
    model_dim: int = Field(default=64, gt=0)
    num_layers: int = Field(default=2, ge=1)
    num_heads: int = Field(default=4, gt=0)
    ffn_ratio: int = Field(default=4, gt=0)
    dropout: float = Field(default=0.1, ge=0, lt=1)
    revin_affine: bool = False
    seed: int = 0

    @model_validator(mode="after")
    def _check_heads(self) -> "StudentConfig":
        if self.model_dim % self.num_heads:
            raise ConfigError(
                f"model_dim {self.model_dim} is not divisible by {self.num_heads} heads"
            )
        return self

    def parameter_count(self) -> int:
        m = self.model_dim
        count = 2 * self.num_variables if self.revin_affine else 0
        count += self.history * m + m
        count += VariableEncoder.parameter_count(m, self.num_layers, m * self.ffn_ratio)
        count += m * self.horizon + self.horizon
        return count


class StudentOutput(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    t_bar: Tensor = Field(..., description="(..., N, D_m) student features")
    a_tse: Tensor = Field(..., description="(..., N, N) student correlations")
    prediction: Tensor = Field(..., description="(..., M, N) forecast in RevIN space")
    stats: RevinStats


class TimeSeriesStudent(Module):
    def __init__(self, config: StudentConfig):
        self.config = config
        rng = np.random.default_rng(config.seed)
        self.revin = RevIN(config.num_variables, affine=config.revin_affine)
        self.embedding = Linear(config.history, config.model_dim, rng)
        self.encoder = VariableEncoder(
            config.model_dim,
            config.num_layers,
            config.num_heads,
            config.model_dim * config.ffn_ratio,
            config.dropout,
            rng,
        )
        self.head = Linear(config.model_dim, config.horizon, rng)
        logger.debug(f"Student built with {self.num_parameters()} parameters")

    def revin_normalize(self, x_h: np.ndarray) -> tuple[Tensor, RevinStats]:
        expected = (self.config.history, self.config.num_variables)
        if x_h.shape[-2:] != expected:
            raise ShapeError(f"student expects history {expected}, got {x_h.shape[-2:]}")
        return self.revin.normalize(x_h)

    def inverted_embed(self, x: Tensor) -> Tensor:
        """Each variable's whole history becomes one (D_m,) token."""
        return self.embedding(x.swapaxes(-1, -2))

    def tst_encode(self, tokens: Tensor) -> tuple[Tensor, Tensor]:
        return self.encoder(tokens)

    def project(self, t_bar: Tensor) -> Tensor:
        return self.head(t_bar).swapaxes(-1, -2)

    def forward(self, x_h: np.ndarray) -> StudentOutput:
        x, stats = self.revin_normalize(x_h)
        t_bar, a_tse = self.tst_encode(self.inverted_embed(x))
        return StudentOutput(t_bar=t_bar, a_tse=a_tse, prediction=self.project(t_bar), stats=stats)

    def standardized_prediction(self, output: StudentOutput) -> Tensor:
        """Prediction in per-window standard units, the space of the loss."""
        return self.revin.to_standard(output.prediction)

    def forecast(self, x_h: np.ndarray) -> np.ndarray:
        """Denormalized (..., M, N) forecast from raw history."""
        output = self.forward(x_h)
        return self.revin.denormalize(output.prediction, output.stats)
