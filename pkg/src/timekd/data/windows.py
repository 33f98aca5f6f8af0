"""
Sliding history/horizon windows and per-window statistics.
"""

import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..errors import ContractError, InsufficientDataError
from .dataset import DataSplit

logger = logging.getLogger(__name__)

STATS_EPS = 1e-5


def window_stats(x_h: np.ndarray, eps: float = STATS_EPS) -> tuple[np.ndarray, np.ndarray]:
    """Per-variable mean and ``sqrt(var + eps)`` over the history axis."""
    mean = x_h.mean(axis=-2)
    std = np.sqrt(x_h.var(axis=-2) + eps)
    return mean, std


class TimeSeriesWindow(BaseModel):
    """One (history, future) pair cut from a split."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    index: int = Field(..., ge=0, description="position within the split's window list")
    x_h: np.ndarray = Field(..., description="(H, N) history")
    x_g: np.ndarray = Field(..., description="(G, N) future, empty at forecast time")
    mean: np.ndarray
    std: np.ndarray

    @property
    def history_length(self) -> int:
        return self.x_h.shape[0]

    @property
    def horizon(self) -> int:
        return self.x_g.shape[0]

    @property
    def num_variables(self) -> int:
        return self.x_h.shape[1]

    def normalized_history(self) -> np.ndarray:
        return (self.x_h - self.mean) / self.std

    def normalized_target(self) -> np.ndarray:
        return (self.x_g - self.mean) / self.std


def window_count(length: int, history: int, horizon: int, stride: int = 1) -> int:
    if length < history + horizon:
        return 0
    return (length - history - horizon) // stride + 1


def make_windows(
    split: DataSplit | np.ndarray,
    history: int,
    horizon: int,
    stride: int = 1,
) -> list[TimeSeriesWindow]:
    """Cut every (H, G) window with the given stride, in chronological order."""
    if history < 2:
        raise ContractError(f"history length must be at least 2, got {history}")
    if horizon < 1 or stride < 1:
        raise ContractError(f"horizon {horizon} and stride {stride} must be positive")
    values = split.values if isinstance(split, DataSplit) else np.asarray(split)
    count = window_count(values.shape[0], history, horizon, stride)
    if count == 0:
        raise InsufficientDataError(
            f"{values.shape[0]} rows cannot hold a window of {history}+{horizon}"
        )
    windows = []
    for i in range(count):
        start = i * stride
        x_h = values[start : start + history]
        x_g = values[start + history : start + history + horizon]
        mean, std = window_stats(x_h)
        windows.append(TimeSeriesWindow(index=i, x_h=x_h, x_g=x_g, mean=mean, std=std))
    logger.debug(f"Cut {count} windows (H={history}, G={horizon}, stride={stride})")
    return windows


def history_window(values: np.ndarray, history: int) -> TimeSeriesWindow:
    """Window over the last ``history`` rows with no known future."""
    if values.shape[0] < history:
        raise InsufficientDataError(
            f"{values.shape[0]} rows cannot hold a history of {history}"
        )
    x_h = np.asarray(values[-history:], dtype=np.float64)
    mean, std = window_stats(x_h)
    return TimeSeriesWindow(
        index=0, x_h=x_h, x_g=np.zeros((0, x_h.shape[1])), mean=mean, std=std
    )


def training_fraction(split: DataSplit, fraction: float) -> DataSplit:
    """Keep the first ``ceil(fraction * rows)`` rows of a split."""
    if not 0.0 < fraction <= 1.0:
        raise ContractError(f"training fraction must be in (0, 1], got {fraction}")
    keep = math.ceil(fraction * split.num_rows)
    return DataSplit(
        name=split.name,
        values=split.values[:keep],
        timestamps=split.timestamps[:keep],
        offset=split.offset,
    )
