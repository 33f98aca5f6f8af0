"""
Data models for the TimeKD pipeline.
"""

import statistics

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import ShapeError


class PrivilegedArtifact(BaseModel):
    """Teacher outputs for one training window, consumed by distillation."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    index: int = Field(..., ge=0, description="training window index")
    a_pe: np.ndarray = Field(..., description="(N, N) privileged correlations")
    e_gt: np.ndarray = Field(..., description="(N, D_m) privileged features")

    @model_validator(mode="after")
    def _check_shapes(self) -> "PrivilegedArtifact":
        n = self.a_pe.shape[0]
        if self.a_pe.shape != (n, n) or self.e_gt.ndim != 2 or self.e_gt.shape[0] != n:
            raise ShapeError(
                f"artifact shapes a_pe {self.a_pe.shape} / e_gt {self.e_gt.shape} disagree"
            )
        return self

    @property
    def num_variables(self) -> int:
        return self.a_pe.shape[0]

    @property
    def model_dim(self) -> int:
        return self.e_gt.shape[1]


class DatasetSummary(BaseModel):
    """What ``ingest`` reports about a validated dataset."""

    name: str
    rows: int
    variables: int
    columns: list[str]
    first_timestamp: str
    last_timestamp: str
    split_rows: dict[str, int]
    split_windows: dict[str, int]


class MetricsReport(BaseModel):
    """Per-seed test metrics for one dataset and horizon."""

    dataset: str
    horizon: int
    metric_space: str
    windows: int = Field(..., ge=0, description="test windows evaluated per seed")
    seeds: list[int]
    mse: list[float]
    mae: list[float]
    runtime_seconds: float = 0.0
    student_trainable_parameters: int = 0
    teacher_trainable_parameters: int = 0
    clm_frozen_parameters: int = 0

    @staticmethod
    def _spread(values: list[float]) -> tuple[float, float]:
        if not values:
            return float("nan"), float("nan")
        std = statistics.stdev(values) if len(values) > 1 else 0.0
        return statistics.mean(values), std

    @property
    def mse_mean_std(self) -> tuple[float, float]:
        return self._spread(self.mse)

    @property
    def mae_mean_std(self) -> tuple[float, float]:
        return self._spread(self.mae)

    def merged(self, other: "MetricsReport") -> "MetricsReport":
        """Combine runs of the same dataset and horizon under different seeds."""
        return self.model_copy(
            update={
                "seeds": self.seeds + other.seeds,
                "mse": self.mse + other.mse,
                "mae": self.mae + other.mae,
                "runtime_seconds": self.runtime_seconds + other.runtime_seconds,
            }
        )

    def to_frame(self) -> pd.DataFrame:
        """Deterministic per-seed table; runtime is left out so reruns match."""
        return pd.DataFrame(
            {
                "dataset": self.dataset,
                "horizon": self.horizon,
                "metric_space": self.metric_space,
                "seed": self.seeds,
                "windows": self.windows,
                "mse": self.mse,
                "mae": self.mae,
                "student_trainable_parameters": self.student_trainable_parameters,
                "teacher_trainable_parameters": self.teacher_trainable_parameters,
                "clm_frozen_parameters": self.clm_frozen_parameters,
            }
        )

    def to_table(self) -> str:
        mse_mean, mse_std = self.mse_mean_std
        mae_mean, mae_std = self.mae_mean_std
        lines = [
            f"dataset       {self.dataset}",
            f"horizon       {self.horizon}",
            f"metric space  {self.metric_space}",
            f"test windows  {self.windows}",
            f"seeds         {', '.join(map(str, self.seeds))}",
            f"MSE           {mse_mean:.6f} +/- {mse_std:.6f}",
            f"MAE           {mae_mean:.6f} +/- {mae_std:.6f}",
            f"runtime       {self.runtime_seconds:.2f}s",
            f"student trainable parameters  {self.student_trainable_parameters}",
            f"teacher trainable parameters  {self.teacher_trainable_parameters}",
            f"clm frozen parameters         {self.clm_frozen_parameters}",
        ]
        return "\n".join(lines) + "\n"


class TrainingSummary(BaseModel):
    """Outcome of a teacher, student or joint training command."""

    stage: str
    windows: int
    epochs: int
    steps: int
    best_epoch: int
    best_val_loss: float
    config_hash: str | None = None
    outputs: list[str] = Field(default_factory=list)
    checksums: dict[str, str] = Field(default_factory=dict)
