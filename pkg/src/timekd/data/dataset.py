"""
Multivariate series loading and chronological splitting.
"""

import logging
import math
import re
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..errors import ContractError, IoError, ParseError

logger = logging.getLogger(__name__)

SplitName = Literal["train", "val", "test"]

ETT_SPLIT = (0.6, 0.2, 0.2)
DEFAULT_SPLIT = (0.7, 0.1, 0.2)
SCALE_EPS = 1e-5


def default_split_ratios(name: str) -> tuple[float, float, float]:
    """ETT-family datasets use 6:2:2, everything else 7:1:2."""
    return ETT_SPLIT if name.upper().startswith("ETT") else DEFAULT_SPLIT


def split_sizes(num_rows: int, ratios: tuple[float, float, float]) -> tuple[int, int, int]:
    train = math.floor(num_rows * ratios[0] + 1e-9)
    val = math.floor(num_rows * ratios[1] + 1e-9)
    return train, val, num_rows - train - val


class DataSplit(BaseModel):
    """A contiguous chronological slice of a dataset."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str
    values: np.ndarray = Field(..., description="(rows, variables) float64 values")
    timestamps: list[str]
    offset: int = Field(0, ge=0, description="row index of the first value in the dataset")

    @property
    def num_rows(self) -> int:
        return self.values.shape[0]

    @property
    def num_variables(self) -> int:
        return self.values.shape[1]


class Dataset(BaseModel):
    """A loaded multivariate series with its split configuration."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str
    freq: str = Field("hour", description="sampling unit used in prompts")
    columns: list[str]
    timestamps: list[str]
    values: np.ndarray
    split_ratios: tuple[float, float, float] = DEFAULT_SPLIT

    @model_validator(mode="after")
    def _check_shape(self) -> "Dataset":
        if self.values.ndim != 2:
            raise ContractError(f"values must be 2-D, got shape {self.values.shape}")
        if self.values.shape != (len(self.timestamps), len(self.columns)):
            raise ContractError(
                f"values {self.values.shape} do not match "
                f"{len(self.timestamps)} timestamps x {len(self.columns)} columns"
            )
        if not np.all(np.isfinite(self.values)):
            raise ContractError("dataset values must be finite")
        if abs(sum(self.split_ratios) - 1.0) > 1e-6 or min(self.split_ratios) < 0:
            raise ContractError(f"invalid split ratios {self.split_ratios}")
        return self

    @property
    def num_rows(self) -> int:
        return self.values.shape[0]

    @property
    def num_variables(self) -> int:
        return self.values.shape[1]

    def split_bounds(self) -> tuple[int, int]:
        train, val, _ = split_sizes(self.num_rows, self.split_ratios)
        return train, train + val

    def split(self, name: SplitName) -> DataSplit:
        train_end, val_end = self.split_bounds()
        start, stop = {
            "train": (0, train_end),
            "val": (train_end, val_end),
            "test": (val_end, self.num_rows),
        }[name]
        return DataSplit(
            name=name,
            values=self.values[start:stop],
            timestamps=self.timestamps[start:stop],
            offset=start,
        )

    def scaler(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-variable mean and std of the training split."""
        train = self.split("train").values
        if train.shape[0] == 0:
            raise ContractError("training split is empty")
        return train.mean(axis=0), np.sqrt(train.var(axis=0) + SCALE_EPS)


def _timestamps_increasing(timestamps: list[str]) -> int | None:
    """Index of the first out-of-order timestamp, or None."""
    for i in range(1, len(timestamps)):
        if timestamps[i] > timestamps[i - 1]:
            continue
        parsed = pd.to_datetime(pd.Series(timestamps), errors="coerce")
        if parsed.notna().all() and parsed.is_monotonic_increasing and parsed.is_unique:
            return None
        return i
    return None


def load_csv(
    path: str | Path,
    *,
    freq: str = "hour",
    name: str | None = None,
    split_ratios: tuple[float, float, float] | None = None,
) -> Dataset:
    """Read ``timestamp,<var_1>,...,<var_N>`` rows into a ``Dataset``.

    Line numbers in ``ParseError`` are 1-based file lines, header included.
    """
    path = Path(path)
    if not path.is_file():
        raise IoError(f"dataset file not found: {path}")

    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as exc:
        raise ParseError(1, "missing header row") from exc
    except pd.errors.ParserError as exc:
        match = re.search(r"line (\d+)", str(exc))
        raise ParseError(int(match.group(1)) if match else 0, str(exc)) from exc
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc

    if frame.shape[1] < 2:
        raise ParseError(1, "expected a timestamp column and at least one variable")

    raw = frame.iloc[:, 1:]
    numeric = raw.apply(lambda column: pd.to_numeric(column.str.strip(), errors="coerce"))
    bad = numeric.isna().to_numpy() | ~np.isfinite(numeric.to_numpy(dtype=np.float64))
    if bad.any():
        row, col = map(int, np.argwhere(bad)[0])
        value = raw.iat[row, col]
        raise ParseError(
            row + 2,
            f"non-numeric or non-finite value {value!r} in column {raw.columns[col]!r}",
        )

    timestamps = [str(t).strip() for t in frame.iloc[:, 0]]
    out_of_order = _timestamps_increasing(timestamps)
    if out_of_order is not None:
        raise ParseError(out_of_order + 2, f"timestamp {timestamps[out_of_order]!r} is not increasing")

    name = name or path.stem
    dataset = Dataset(
        name=name,
        freq=freq,
        columns=[str(c) for c in raw.columns],
        timestamps=timestamps,
        values=numeric.to_numpy(dtype=np.float64),
        split_ratios=split_ratios or default_split_ratios(name),
    )
    logger.info(
        f"Loaded {dataset.name}: {dataset.num_rows} rows x {dataset.num_variables} variables"
    )
    return dataset


def write_csv(dataset: Dataset, path: str | Path) -> Path:
    """Write a dataset in the same layout ``load_csv`` reads."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(dataset.values, columns=dataset.columns)
    frame.insert(0, "date", dataset.timestamps)
    frame.to_csv(path, index=False, float_format="%.17g")
    return path
