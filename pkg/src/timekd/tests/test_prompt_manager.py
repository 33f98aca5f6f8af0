"""
Unit tests for prompt rendering and the tagged tokenizer.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from timekd.errors import ConfigError, ContractError, IoError
from timekd.managers import PromptManager, render_history_prompt
from timekd.prompts import (
    OOV_ID,
    PAD_ID,
    Modality,
    TaggedTokenSequence,
    Tokenizer,
    Vocabulary,
    pad_batch,
)

HISTORY_TEXT = (
    "The values were 1.000, 2.500, and -0.250 every hour. "
    "Forecast the values for the next 2 hours."
)


@pytest.fixture
def manager():
    return PromptManager()


@pytest.fixture
def tokenizer(manager):
    words = manager.template_words() | set(manager.frequency_words())
    return Tokenizer(Vocabulary.build(words))


class TestPromptManager:
    """Tests for template loading and rendering."""

    def test_history_prompt_text_and_spans(self, manager):
        """Test the rendered history prompt and its value spans."""
        rendered = manager.render_history([1.0, 2.5, -0.25], "hour", 2)
        assert rendered.text == HISTORY_TEXT
        assert rendered.value_spans == [(16, 21), (23, 28), (34, 40)]
        assert [rendered.text[a:b] for a, b in rendered.value_spans] == ["1.000", "2.500", "-0.250"]

    def test_groundtruth_prompt(self, manager):
        """Test that the future values and horizon are filled in."""
        rendered = manager.render_groundtruth([1.0, 2.0], [3.0], "day")
        assert rendered.text == (
            "The values were 1.000 and 2.000 every day. "
            "The values for the next 1 days will be 3.000."
        )
        assert len(rendered.value_spans) == 3
        start, end = rendered.value_spans[-1]
        assert rendered.text[start:end] == "3.000"

    def test_repeated_values_get_distinct_spans(self, manager):
        """Test that equal values map to their own positions."""
        rendered = manager.render_history([0.5, 0.5, 0.5], "hour", 1)
        starts = [start for start, _ in rendered.value_spans]
        assert len(set(starts)) == 3
        assert starts == sorted(starts)

    def test_decimals(self):
        """Test the configured number of decimals."""
        rendered = PromptManager(decimals=1).render_history([1.25, 2.0], "hour", 1)
        assert "1.2 and 2.0" in rendered.text

    def test_explicit_plural(self, manager):
        """Test overriding the plural frequency word."""
        rendered = manager.render_history([1.0], "hour", 3, freq_plural="steps")
        assert rendered.text.endswith("next 3 steps.")

    def test_empty_series_rejected(self, manager):
        """Test that a value field needs at least one value."""
        with pytest.raises(ContractError):
            manager.render_history([], "hour", 1)

    def test_horizon_must_be_positive(self, manager):
        """Test that a zero horizon is rejected."""
        with pytest.raises(ContractError):
            manager.render_history([1.0], "hour", 0)

    def test_unknown_template(self, manager):
        """Test that a missing template name raises ConfigError."""
        with pytest.raises(ConfigError):
            manager.get_prompt("nonexistent")

    def test_missing_prompt_file(self, tmp_path):
        """Test that an absent YAML file raises ConfigError."""
        with pytest.raises(ConfigError):
            PromptManager(tmp_path / "missing.yaml").load_prompts()

    def test_unknown_field(self, tmp_path):
        """Test that a template field with no value raises ConfigError."""
        path = tmp_path / "prompts.yaml"
        path.write_text('history_prompt: "{history} then {mystery}"\n', encoding="utf-8")
        with pytest.raises(ConfigError):
            PromptManager(path).render_history([1.0], "hour", 1)

    def test_template_words(self, manager):
        """Test that literal template words are collected."""
        words = manager.template_words()
        assert {"The", "values", "Forecast", "will"} <= words
        assert "history" not in words

    def test_module_level_helper(self):
        """Test the convenience renderer."""
        assert render_history_prompt([1.0, 2.5, -0.25], "hour", 2) == HISTORY_TEXT


class TestVocabulary:
    """Tests for vocabulary construction and persistence."""

    def test_build_order(self):
        """Test special tokens, digits, numeric marks, punctuation, then sorted words."""
        vocab = Vocabulary.build(["zeta", "alpha", "5", ""])
        assert vocab.tokens[:3] == ["<pad>", "<unk>", "0"]
        assert vocab.tokens[12:15] == [".", "-", ","]
        assert vocab.tokens[-2:] == ["alpha", "zeta"]
        assert len(vocab) == 27

    def test_unknown_word_maps_to_oov(self):
        """Test the out-of-vocabulary id."""
        vocab = Vocabulary.build(["alpha"])
        assert vocab.id_of("banana") == OOV_ID
        assert vocab.id_of("<pad>") == PAD_ID

    def test_invalid_vocabularies(self):
        """Test the special-token prefix and uniqueness rules."""
        with pytest.raises(ContractError):
            Vocabulary(["a", "b"])
        with pytest.raises(ContractError):
            Vocabulary(["<pad>", "<unk>", "a", "a"])

    def test_save_and_load(self, tmp_path):
        """Test that a saved vocabulary keeps its version."""
        vocab = Vocabulary.build(["hour", "day"])
        loaded = Vocabulary.load(vocab.save(tmp_path / "vocab.txt"))
        assert loaded.tokens == vocab.tokens
        assert loaded.version == vocab.version

    def test_version_tracks_content(self):
        """Test that different word sets get different versions."""
        assert Vocabulary.build(["a"]).version != Vocabulary.build(["b"]).version

    def test_load_missing(self, tmp_path):
        """Test that a missing vocabulary file raises IoError."""
        with pytest.raises(IoError):
            Vocabulary.load(tmp_path / "missing.txt")

    def test_token_of_range(self):
        """Test that ids outside the vocabulary are rejected."""
        with pytest.raises(ContractError):
            Vocabulary.build([]).token_of(999)


class TestTokenizer:
    """Tests for tagged tokenization."""

    def test_values_are_tagged_as_series(self, manager, tokenizer):
        """Test that only digits inside value spans are series tokens."""
        rendered = manager.render_history([1.0, 2.5, -0.25], "hour", 2)
        sequence = tokenizer.tokenize(rendered.text, rendered.value_spans)

        assert sequence.true_length == 34
        assert len(sequence) == 34
        assert int(sequence.series_mask().sum()) == 16
        # "next 2": the horizon is a number outside every span
        horizon_position = sequence.ids.index(tokenizer.vocabulary.id_of("2"), 20)
        assert sequence.tags[horizon_position] is Modality.TEXT
        assert OOV_ID not in sequence.ids

    def test_numbers_split_per_character(self, tokenizer):
        """Test that a number becomes one token per character."""
        sequence = tokenizer.tokenize("-12.5")
        tokens = [tokenizer.vocabulary.token_of(i) for i in sequence.ids]
        assert tokens == ["-", "1", "2", ".", "5"]
        assert all(tag is Modality.TIME_SERIES for tag in sequence.tags)

    def test_detokenize_restores_prompt(self, manager, tokenizer):
        """Test that detokenizing a rendered prompt gives the same text."""
        rendered = manager.render_history([1.0, 2.5, -0.25], "hour", 2)
        sequence = tokenizer.tokenize(rendered.text, rendered.value_spans)
        assert tokenizer.detokenize(sequence) == HISTORY_TEXT

    def test_unknown_words(self, tokenizer):
        """Test that unseen words become the oov id."""
        sequence = tokenizer.tokenize("banana values")
        assert sequence.ids[0] == OOV_ID
        assert sequence.tags == [Modality.TEXT, Modality.TEXT]

    def test_empty_prompt(self, tokenizer):
        """Test that a blank prompt is rejected."""
        with pytest.raises(ContractError):
            tokenizer.tokenize("   ")

    def test_sequence_tag_mismatch(self):
        """Test that ids and tags must have the same length."""
        with pytest.raises(ValidationError):
            TaggedTokenSequence(ids=[1, 2], tags=[Modality.TEXT], true_length=1, vocab_version="x")


class TestPadBatch:
    """Tests for batching token sequences."""

    def test_right_padding(self, tokenizer):
        """Test padding ids, series mask and true lengths."""
        short = tokenizer.tokenize("1")
        long = tokenizer.tokenize("values 2.5")
        ids, series, lengths = pad_batch([short, long])

        assert ids.shape == (2, 4)
        np.testing.assert_array_equal(ids[0, 1:], [PAD_ID] * 3)
        np.testing.assert_array_equal(series[0], [True, False, False, False])
        np.testing.assert_array_equal(series[1], [False, True, True, True])
        np.testing.assert_array_equal(lengths, [1, 4])

    def test_empty_batch(self):
        """Test that an empty batch is rejected."""
        with pytest.raises(ContractError):
            pad_batch([])
