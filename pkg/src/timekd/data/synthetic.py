"""
Seeded synthetic multivariate series with lagged cross-variable coupling.
"""

import numpy as np
import pandas as pd

from .dataset import DEFAULT_SPLIT, Dataset

PERIODS = (12, 24, 48)
COUPLING_LAG = 3
COUPLING = 0.5


def synth_dataset(
    seed: int,
    length: int = 2000,
    num_variables: int = 2,
    noise: float = 0.05,
    freq: str = "hour",
    start: str = "2016-07-01",
) -> Dataset:
    """Sum-of-sinusoids series where variable j also follows variable j-1.

    Periods are drawn from {12, 24, 48}, so with ``noise=0`` every variable
    repeats exactly every 48 steps.
    """
    rng = np.random.default_rng(seed)
    warmup = COUPLING_LAG * num_variables
    steps = np.arange(-warmup, length, dtype=np.float64)

    base = np.zeros((steps.size, num_variables))
    for j in range(num_variables):
        for _ in range(int(rng.integers(2, 4))):
            period = PERIODS[int(rng.integers(len(PERIODS)))]
            amplitude = rng.uniform(0.5, 2.0)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            base[:, j] += amplitude * np.sin(2.0 * np.pi * steps / period + phase)
        base[:, j] += rng.uniform(-1.0, 1.0)

    series = base.copy()
    for j in range(1, num_variables):
        series[COUPLING_LAG:, j] += COUPLING * series[:-COUPLING_LAG, j - 1]

    values = series[warmup:] + noise * rng.standard_normal((length, num_variables))
    timestamps = (
        pd.date_range(start, periods=length, freq="h").strftime("%Y-%m-%d %H:%M:%S").tolist()
    )
    return Dataset(
        name=f"synthetic-{seed}",
        freq=freq,
        columns=[f"x{j}" for j in range(num_variables)],
        timestamps=timestamps,
        values=values,
        split_ratios=DEFAULT_SPLIT,
    )
