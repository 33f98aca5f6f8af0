"""
Pytest configuration and shared fixtures.
"""

import numpy as np
import pytest

from timekd.autodiff import precision
from timekd.config import Settings
from timekd.data import synth_dataset
from timekd.models import CalibratedLanguageModel

TINY_SETTINGS = {
    "history_length": 8,
    "horizon": 4,
    "synthetic_length": 160,
    "synthetic_variables": 2,
    "synthetic_noise": 0.01,
    "train_stride": 4,
    "eval_stride": 2,
    "clm_hidden_dim": 8,
    "clm_layers": 1,
    "clm_heads": 2,
    "clm_max_seq_len": 256,
    "model_dim": 8,
    "teacher_layers": 1,
    "teacher_heads": 2,
    "student_layers": 1,
    "student_heads": 2,
    "ffn_ratio": 2,
    "dropout": 0.0,
    "precision": "float64",
    "batch_size": 8,
    "teacher_epochs": 2,
    "student_epochs": 2,
    "patience": 2,
    "log_level": "ERROR",  # Quiet during tests
}


@pytest.fixture
def float64():
    """Run the test with float64 as the default tensor precision."""
    with precision(np.float64) as dtype:
        yield dtype


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def run_dir(tmp_path):
    """Create a temporary run output directory."""
    out = tmp_path / "run"
    out.mkdir()
    return out


@pytest.fixture
def make_settings(run_dir):
    """Factory for desk-sized settings writing into ``run_dir``."""

    def factory(**overrides) -> Settings:
        return Settings(**{**TINY_SETTINGS, "output_dir": run_dir, **overrides})

    return factory


@pytest.fixture
def tiny_settings(make_settings):
    return make_settings()


@pytest.fixture
def synthetic():
    """Small seeded two-variable synthetic dataset."""
    return synth_dataset(seed=0, length=160, num_variables=2, noise=0.01)


@pytest.fixture
def reset_clm_counter():
    """Zero the language model's encode counter around a test."""
    CalibratedLanguageModel.encode_calls = 0
    yield
    CalibratedLanguageModel.encode_calls = 0


@pytest.fixture
def csv_factory(tmp_path):
    """Write CSV text to a temporary file and return its path."""

    def factory(text: str, name: str = "data.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return factory
