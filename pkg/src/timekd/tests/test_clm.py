"""
Unit tests for the calibrated language model.
"""

import math

import numpy as np
import pytest

from timekd.autodiff import MASK_VALUE, Tensor
from timekd.errors import ConfigError, ContractError, LengthError
from timekd.models import (
    CalibratedLanguageModel,
    ClmConfig,
    build_mask,
    clm_encode,
    extract_last_token,
)
from timekd.prompts import Modality, TaggedTokenSequence

T, S = Modality.TEXT, Modality.TIME_SERIES


def tiny_config(**overrides) -> ClmConfig:
    base = {
        "vocab_size": 12,
        "hidden_dim": 8,
        "num_layers": 2,
        "num_heads": 2,
        "ffn_ratio": 2,
        "max_seq_len": 16,
    }
    return ClmConfig(**{**base, **overrides})


class TestBuildMask:
    """Tests for the causal calibration mask."""

    def test_values(self):
        """Test causal, cross-modality and same-modality entries."""
        mask = build_mask([T, S, S], 3, delta=1.5)
        expected = np.array(
            [
                [0.0, MASK_VALUE, MASK_VALUE],
                [-1.5, 0.0, MASK_VALUE],
                [-1.5, 0.0, 0.0],
            ]
        )
        np.testing.assert_array_equal(mask, expected)

    def test_padding_columns_masked(self):
        """Test that positions past the true length are never attended."""
        mask = build_mask([S, S, T, T], 2, delta=0.0)
        assert np.all(mask[:, 2:] == MASK_VALUE)
        assert mask[1, 0] == 0.0

    def test_boolean_series_mask_accepted(self):
        """Test that a boolean series mask gives the same result as tags."""
        from_tags = build_mask([T, S], 2, delta=2.0)
        from_bools = build_mask(np.array([False, True]), 2, delta=2.0)
        np.testing.assert_array_equal(from_tags, from_bools)

    def test_true_length_range(self):
        """Test that true length must be within the sequence."""
        with pytest.raises(ContractError):
            build_mask([T, S], 0, delta=1.0)
        with pytest.raises(ContractError):
            build_mask([T, S], 3, delta=1.0)


class TestCalibratedLanguageModel:
    """Tests for encoding with the frozen language model."""

    def test_config_defaults(self):
        """Test the default calibration constant."""
        assert ClmConfig(vocab_size=10).delta == pytest.approx(math.log(10.0))

    def test_config_head_divisibility(self):
        """Test that hidden width must split across heads."""
        with pytest.raises(ConfigError):
            tiny_config(hidden_dim=6, num_heads=4)

    def test_frozen_and_counted(self, float64):
        """Test that nothing is trainable and the analytic count matches."""
        config = tiny_config()
        model = CalibratedLanguageModel(config)
        assert model.parameters(trainable_only=True) == []
        assert model.num_parameters() == config.parameter_count()
        assert model.training is False

    def test_output_shapes(self, float64, reset_clm_counter):
        """Test hidden states, attention maps and the call counter."""
        model = CalibratedLanguageModel(tiny_config())
        ids = np.array([[3, 4, 5, 0], [6, 7, 8, 9]])
        series = np.array([[False, True, True, False], [False, False, True, True]])
        out = model.encode_ids(ids, series, np.array([3, 4]), return_attention=True)

        assert out.hidden.shape == (2, 4, 8)
        assert len(out.attentions) == 2
        assert out.attentions[0].shape == (2, 2, 4, 4)
        assert out.last_token().shape == (2, 8)
        assert CalibratedLanguageModel.encode_calls == 1

    def test_causal(self, float64):
        """Test that changing a later token leaves earlier states unchanged."""
        model = CalibratedLanguageModel(tiny_config())
        series = np.array([[False, False, True, True]])
        lengths = np.array([4])
        a = model.encode_ids(np.array([[3, 4, 5, 6]]), series, lengths).hidden
        b = model.encode_ids(np.array([[3, 4, 5, 11]]), series, lengths).hidden
        np.testing.assert_allclose(a[0, :3], b[0, :3], atol=1e-12)
        assert not np.allclose(a[0, 3], b[0, 3])

    def test_padding_does_not_leak(self, float64):
        """Test that padding leaves the real positions untouched."""
        model = CalibratedLanguageModel(tiny_config())
        short = model.encode_ids(
            np.array([[3, 4, 5]]), np.array([[False, True, True]]), np.array([3])
        ).hidden
        padded = model.encode_ids(
            np.array([[3, 4, 5, 0, 0]]),
            np.array([[False, True, True, False, False]]),
            np.array([3]),
        ).hidden
        np.testing.assert_allclose(short[0], padded[0, :3], atol=1e-12)

    def test_calibration_reduces_cross_modality_attention(self, float64):
        """Test that a larger delta moves attention mass within a modality."""
        ids = np.array([[3, 4, 5, 6, 7]])
        series = np.array([[False, False, True, True, True]])
        lengths = np.array([5])
        text_mass = []
        for delta in (0.0, 3.0):
            model = CalibratedLanguageModel(tiny_config(delta=delta))
            first = model.encode_ids(ids, series, lengths, return_attention=True).attentions[0]
            # mass that series rows put on text columns
            text_mass.append(first[0, :, 2:, :2].sum(axis=-1))
        assert np.all(text_mass[1] < text_mass[0])

    def test_single_modality_ignores_delta(self, float64):
        """Test that delta has no effect without modality boundaries."""
        ids = np.array([[3, 4, 5]])
        series = np.zeros((1, 3), dtype=bool)
        lengths = np.array([3])
        plain = CalibratedLanguageModel(tiny_config(delta=0.0)).encode_ids(ids, series, lengths)
        shifted = CalibratedLanguageModel(tiny_config(delta=4.0)).encode_ids(ids, series, lengths)
        np.testing.assert_allclose(plain.hidden, shifted.hidden, atol=1e-12)

    @pytest.mark.parametrize("trial", range(5))
    def test_zero_delta_is_plain_causal_transformer(self, float64, trial):
        """Test that delta = 0 reproduces a causal, padding-masked stack bit for bit."""
        rng = np.random.default_rng(trial)
        model = CalibratedLanguageModel(tiny_config(num_layers=3, delta=0.0, seed=trial))
        batch, size = 3, 10
        ids = rng.integers(0, 12, (batch, size))
        series = rng.random((batch, size)) < 0.5
        lengths = rng.integers(1, size + 1, batch)

        rows, cols = np.indices((size, size))
        masks = np.stack(
            [np.where((cols > rows) | (cols >= n), MASK_VALUE, 0.0) for n in lengths]
        )
        x = Tensor(
            model.token_embedding.data[ids] + model.position_embedding.data[:size],
            dtype=np.float64,
        )
        for layer in model.layers:
            x, _ = layer(x, masks)

        encoded = model.encode_ids(ids, series, lengths).hidden
        assert np.array_equal(encoded, x.data)

    @pytest.mark.parametrize("trial", range(5))
    def test_large_delta_silences_cross_modality(self, float64, trial):
        """Test that delta = 50 leaves every cross-modality weight below 1e-8."""
        rng = np.random.default_rng(trial)
        model = CalibratedLanguageModel(tiny_config(num_layers=3, delta=50.0, seed=trial))
        batch, size = 3, 10
        ids = rng.integers(0, 12, (batch, size))
        series = rng.random((batch, size)) < 0.5
        lengths = rng.integers(1, size + 1, batch)

        out = model.encode_ids(ids, series, lengths, return_attention=True)
        rows, cols = np.indices((size, size))
        for b, n in enumerate(lengths):
            cross = (series[b][:, None] != series[b][None, :]) & (cols <= rows) & (rows < n)
            for weights in out.attentions:
                assert np.all(weights[b][:, cross] <= 1e-8)

    def test_length_error(self, float64):
        """Test sequences beyond the maximum length."""
        model = CalibratedLanguageModel(tiny_config(max_seq_len=4))
        with pytest.raises(LengthError):
            model.encode_ids(np.ones((1, 5), dtype=int), np.zeros((1, 5), dtype=bool), np.array([5]))

    def test_token_id_range(self, float64):
        """Test that ids outside the vocabulary are rejected."""
        model = CalibratedLanguageModel(tiny_config())
        with pytest.raises(ContractError):
            model.encode_ids(np.array([[12]]), np.zeros((1, 1), dtype=bool), np.array([1]))

    def test_deterministic_from_seed(self, float64):
        """Test that the seed fixes the weights."""
        a = CalibratedLanguageModel(tiny_config(seed=3))
        b = CalibratedLanguageModel(tiny_config(seed=3))
        assert a.checksum() == b.checksum()


class TestWeights:
    """Tests for importing language model weights."""

    def test_save_and_import(self, float64, tmp_path):
        """Test that imported weights reproduce the saved model."""
        model = CalibratedLanguageModel(tiny_config(seed=7))
        path = model.save_weights(tmp_path / "clm.tkdw")

        loaded = CalibratedLanguageModel.from_weights(path, tiny_config(seed=0))
        assert loaded.checksum() == model.checksum()
        assert loaded.parameters(trainable_only=True) == []

    def test_shape_mismatch(self, float64, tmp_path):
        """Test that weights for another architecture are refused."""
        path = CalibratedLanguageModel(tiny_config()).save_weights(tmp_path / "clm.tkdw")
        with pytest.raises(ConfigError):
            CalibratedLanguageModel.from_weights(path, tiny_config(hidden_dim=4))


class TestLastToken:
    """Tests for last-token extraction."""

    def test_selects_true_last_position(self):
        """Test gathering by true length."""
        hidden = np.arange(12.0).reshape(2, 3, 2)
        np.testing.assert_array_equal(
            extract_last_token(hidden, np.array([1, 3])), [[0.0, 1.0], [10.0, 11.0]]
        )

    def test_invalid_lengths(self):
        """Test lengths outside the sequence."""
        with pytest.raises(ContractError):
            extract_last_token(np.zeros((1, 3, 2)), np.array([0]))

    def test_single_sequence_helper(self, float64):
        """Test encoding one tagged sequence."""
        model = CalibratedLanguageModel(tiny_config())
        sequence = TaggedTokenSequence(
            ids=[3, 4], tags=[T, S], true_length=2, vocab_version="test"
        )
        assert clm_encode(model, sequence).shape == (2, 8)
