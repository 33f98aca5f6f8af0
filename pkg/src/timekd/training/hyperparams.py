"""
Optimization and loss-weight settings shared by the trainers.
"""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from ..autodiff.optim import AdamWConfig
from ..config.settings import Settings


class HyperParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    delta: float = Field(default=0.0, ge=0)
    lambda_c: float = Field(default=1.0, ge=0, description="correlation distillation")
    lambda_e: float = Field(default=1.0, ge=0, description="feature distillation")
    lambda_r: float = Field(default=1.0, ge=0, description="reconstruction")
    lambda_p: float = Field(default=1.0, ge=0, description="privileged distillation")
    lambda_f: float = Field(default=1.0, ge=0, description="forecasting")
    learning_rate: float = Field(default=1e-3, gt=0)
    weight_decay: float = Field(default=0.0, ge=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    adam_eps: float = Field(default=1e-8, gt=0)
    epochs: int = Field(default=50, gt=0)
    patience: int = Field(default=5, gt=0)
    batch_size: int = Field(default=8, gt=0)
    max_steps: int | None = Field(default=None, gt=0)
    prefetch_windows: int = Field(default=512, gt=0)
    seed: int = 0
    training_mode: Literal["staged", "joint"] = "staged"

    @property
    def distills(self) -> bool:
        """Whether any distillation term carries weight."""
        return self.lambda_p > 0 and (self.lambda_c > 0 or self.lambda_e > 0)

    def adamw(self) -> AdamWConfig:
        return AdamWConfig(
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.adam_eps,
            weight_decay=self.weight_decay,
        )

    @classmethod
    def from_settings(
        cls, settings: Settings, stage: Literal["teacher", "student"], seed: int | None = None
    ) -> "HyperParams":
        return cls(
            delta=settings.effective_delta,
            lambda_c=settings.effective_lambda_c,
            lambda_e=settings.effective_lambda_e,
            lambda_r=settings.lambda_r,
            lambda_p=settings.lambda_p,
            lambda_f=settings.lambda_f,
            learning_rate=settings.learning_rate,
            weight_decay=settings.weight_decay,
            beta1=settings.beta1,
            beta2=settings.beta2,
            adam_eps=settings.adam_eps,
            epochs=settings.teacher_epochs if stage == "teacher" else settings.student_epochs,
            patience=settings.patience,
            batch_size=settings.batch_size,
            max_steps=(
                settings.teacher_max_steps if stage == "teacher" else settings.student_max_steps
            ),
            prefetch_windows=settings.prefetch_windows,
            seed=settings.seeds[0] if seed is None else seed,
            training_mode=settings.training_mode,
        )
