"""
Unit tests for CSV loading, splits, windows and synthetic series.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from timekd.data import (
    Dataset,
    history_window,
    load_csv,
    make_windows,
    split_sizes,
    synth_dataset,
    training_fraction,
    window_count,
    write_csv,
)
from timekd.errors import ContractError, InsufficientDataError, IoError, ParseError

GOOD_CSV = (
    "date,a,b\n"
    "2020-01-01 00:00:00,1.0,10\n"
    "2020-01-01 01:00:00,2.0,20\n"
    "2020-01-01 02:00:00,3.5,30\n"
)


class TestLoadCsv:
    """Tests for parsing and validating dataset files."""

    def test_loads_values_and_columns(self, csv_factory):
        """Test a well-formed file."""
        dataset = load_csv(csv_factory(GOOD_CSV, "weather.csv"))
        assert dataset.name == "weather"
        assert dataset.columns == ["a", "b"]
        assert dataset.timestamps[0] == "2020-01-01 00:00:00"
        np.testing.assert_array_equal(dataset.values[:, 0], [1.0, 2.0, 3.5])
        assert dataset.split_ratios == (0.7, 0.1, 0.2)

    def test_ett_names_use_six_two_two(self, csv_factory):
        """Test that ETT-family files default to a 6:2:2 split."""
        dataset = load_csv(csv_factory(GOOD_CSV, "ETTh1.csv"))
        assert dataset.split_ratios == (0.6, 0.2, 0.2)

    def test_non_numeric_value_reports_line(self, csv_factory):
        """Test that the file line of a bad cell is reported."""
        text = GOOD_CSV.replace("20\n", "oops\n")
        with pytest.raises(ParseError) as exc_info:
            load_csv(csv_factory(text))
        assert exc_info.value.line == 3
        assert "oops" in str(exc_info.value)

    @pytest.mark.parametrize("token", ["nan", "inf"])
    def test_non_finite_value_rejected(self, csv_factory, token):
        """Test that NaN and infinity are parse errors."""
        text = GOOD_CSV.replace("3.5", token)
        with pytest.raises(ParseError) as exc_info:
            load_csv(csv_factory(text))
        assert exc_info.value.line == 4

    def test_timestamps_must_increase(self, csv_factory):
        """Test that a repeated timestamp is rejected at its line."""
        text = GOOD_CSV.replace("02:00:00", "01:00:00")
        with pytest.raises(ParseError) as exc_info:
            load_csv(csv_factory(text))
        assert exc_info.value.line == 4

    def test_missing_file(self, tmp_path):
        """Test that an absent file raises IoError."""
        with pytest.raises(IoError):
            load_csv(tmp_path / "missing.csv")

    def test_empty_file(self, csv_factory):
        """Test that a file without a header is a parse error on line 1."""
        with pytest.raises(ParseError) as exc_info:
            load_csv(csv_factory(""))
        assert exc_info.value.line == 1

    def test_needs_a_variable_column(self, csv_factory):
        """Test that a timestamp-only file is rejected."""
        with pytest.raises(ParseError):
            load_csv(csv_factory("date\n2020-01-01\n"))

    def test_write_then_load_preserves_values(self, synthetic, tmp_path):
        """Test that written files load back bit for bit."""
        path = write_csv(synthetic, tmp_path / "synthetic.csv")
        loaded = load_csv(path, name=synthetic.name, split_ratios=synthetic.split_ratios)
        np.testing.assert_array_equal(loaded.values, synthetic.values)
        assert loaded.timestamps == synthetic.timestamps


class TestSplits:
    """Tests for chronological splitting."""

    def test_split_sizes(self):
        """Test floor-based train/val sizes with the remainder going to test."""
        assert split_sizes(160, (0.7, 0.1, 0.2)) == (112, 16, 32)
        assert split_sizes(101, (0.6, 0.2, 0.2)) == (60, 20, 21)

    def test_splits_are_contiguous(self, synthetic):
        """Test that splits partition the rows in order."""
        train, val, test = (synthetic.split(n) for n in ("train", "val", "test"))
        assert (train.num_rows, val.num_rows, test.num_rows) == (112, 16, 32)
        assert val.offset == 112
        assert test.offset == 128
        np.testing.assert_array_equal(test.values, synthetic.values[128:])

    def test_scaler_uses_training_rows(self, synthetic):
        """Test that normalization statistics come from the train split only."""
        mean, std = synthetic.scaler()
        np.testing.assert_allclose(mean, synthetic.values[:112].mean(axis=0))
        assert std.shape == (2,)

    def test_dataset_rejects_non_finite(self):
        """Test that a constructed dataset must be finite."""
        with pytest.raises(ValidationError):
            Dataset(
                name="bad",
                columns=["a"],
                timestamps=["t0", "t1"],
                values=np.array([[1.0], [np.nan]]),
            )

    def test_dataset_rejects_bad_ratios(self):
        """Test that split ratios must sum to one."""
        with pytest.raises(ValidationError):
            Dataset(
                name="bad",
                columns=["a"],
                timestamps=["t0"],
                values=np.ones((1, 1)),
                split_ratios=(0.5, 0.2, 0.2),
            )


class TestWindows:
    """Tests for sliding windows and per-window statistics."""

    def test_window_count(self):
        """Test the stride formula."""
        assert window_count(112, 8, 4, 4) == 26
        assert window_count(32, 8, 4, 2) == 11
        assert window_count(11, 8, 4) == 0

    def test_window_contents(self, synthetic):
        """Test that windows slice history and future at the stride."""
        train = synthetic.split("train")
        windows = make_windows(train, 8, 4, stride=4)
        assert len(windows) == 26
        second = windows[1]
        assert second.index == 1
        np.testing.assert_array_equal(second.x_h, train.values[4:12])
        np.testing.assert_array_equal(second.x_g, train.values[12:16])
        assert (second.history_length, second.horizon, second.num_variables) == (8, 4, 2)

    def test_window_normalization(self, synthetic):
        """Test that windows are normalized by their own history."""
        window = make_windows(synthetic.split("train"), 8, 4)[0]
        normalized = window.normalized_history()
        np.testing.assert_allclose(normalized.mean(axis=0), 0.0, atol=1e-10)
        expected = (window.x_g - window.x_h.mean(axis=0)) / np.sqrt(window.x_h.var(axis=0) + 1e-5)
        np.testing.assert_allclose(window.normalized_target(), expected)

    def test_history_too_short(self):
        """Test that a history shorter than two steps is rejected."""
        with pytest.raises(ContractError):
            make_windows(np.zeros((20, 2)), 1, 4)

    def test_not_enough_rows(self):
        """Test that a split without a full window raises InsufficientDataError."""
        with pytest.raises(InsufficientDataError):
            make_windows(np.zeros((10, 2)), 8, 4)

    def test_history_window(self):
        """Test a forecast-time window over the last rows."""
        values = np.arange(20.0).reshape(10, 2)
        window = history_window(values, 4)
        np.testing.assert_array_equal(window.x_h, values[-4:])
        assert window.x_g.shape == (0, 2)
        with pytest.raises(InsufficientDataError):
            history_window(values, 11)

    def test_training_fraction(self, synthetic):
        """Test that fractions keep the leading rows, rounded up."""
        train = synthetic.split("train")
        assert training_fraction(train, 0.5).num_rows == 56
        assert training_fraction(train, 0.01).num_rows == 2
        with pytest.raises(ContractError):
            training_fraction(train, 0.0)


class TestSynthetic:
    """Tests for the seeded synthetic generator."""

    def test_deterministic(self):
        """Test that the same seed gives identical values."""
        a = synth_dataset(seed=5, length=100, num_variables=3)
        b = synth_dataset(seed=5, length=100, num_variables=3)
        np.testing.assert_array_equal(a.values, b.values)
        assert a.name == "synthetic-5"
        assert a.columns == ["x0", "x1", "x2"]

    def test_seeds_differ(self):
        """Test that different seeds give different series."""
        a = synth_dataset(seed=1, length=50)
        b = synth_dataset(seed=2, length=50)
        assert not np.allclose(a.values, b.values)

    def test_noise_free_series_is_periodic(self):
        """Test that every variable repeats every 48 steps without noise."""
        values = synth_dataset(seed=3, length=200, num_variables=3, noise=0.0).values
        np.testing.assert_allclose(values[48:], values[:-48], atol=1e-9)
