"""
Forecast error metrics.
"""

import numpy as np

from ..errors import ShapeError


def _pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ShapeError(f"prediction {pred.shape} and truth {truth.shape} differ")
    if pred.size == 0:
        raise ShapeError("metrics need at least one value")
    return pred, truth


def mse(pred, truth) -> float:
    """Mean squared error over every predicted value."""
    pred, truth = _pair(pred, truth)
    return float(np.mean((pred - truth) ** 2))


def mae(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    return float(np.mean(np.abs(pred - truth)))
