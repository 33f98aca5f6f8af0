"""
Data package - CSV loading, chronological splits, windows and synthetic series.
"""

from .dataset import (
    DataSplit,
    Dataset,
    default_split_ratios,
    load_csv,
    split_sizes,
    write_csv,
)
from .synthetic import synth_dataset
from .windows import (
    TimeSeriesWindow,
    history_window,
    make_windows,
    training_fraction,
    window_count,
    window_stats,
)

__all__ = [
    "DataSplit",
    "Dataset",
    "TimeSeriesWindow",
    "default_split_ratios",
    "history_window",
    "load_csv",
    "make_windows",
    "split_sizes",
    "synth_dataset",
    "training_fraction",
    "window_count",
    "window_stats",
    "write_csv",
]
