"""
Word/digit tokenizer that tags every token with its modality.

Numbers are split into one token per character so the vocabulary stays
closed over any rendered value. Tokens that came from a rendered value are
tagged ``TIME_SERIES``; everything else is ``TEXT``.
"""

import hashlib
import logging
import re
from collections.abc import Iterable, Sequence
from enum import Enum
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..errors import ContractError, IoError

logger = logging.getLogger(__name__)

PAD_TOKEN = "<pad>"
OOV_TOKEN = "<unk>"
PAD_ID = 0
OOV_ID = 1

NUMERIC_TOKENS = [*"0123456789", ".", "-"]
PUNCTUATION_TOKENS = [*",;:!?()'\"/%"]

_TOKEN_PATTERN = re.compile(r"-?\d+(?:\.\d+)?|[A-Za-z]+|\S")
_NUMBER_PATTERN = re.compile(r"-?\d+(?:\.\d+)?")


class Modality(str, Enum):
    TEXT = "TEXT"
    TIME_SERIES = "TIME_SERIES"


class TaggedTokenSequence(BaseModel):
    """Token ids with their modality tags."""

    ids: list[int]
    tags: list[Modality]
    true_length: int = Field(..., ge=1)
    vocab_version: str

    @model_validator(mode="after")
    def _check_lengths(self) -> "TaggedTokenSequence":
        if len(self.ids) != len(self.tags):
            raise ContractError(f"{len(self.ids)} ids but {len(self.tags)} tags")
        if self.true_length > len(self.ids):
            raise ContractError(
                f"true_length {self.true_length} exceeds sequence length {len(self.ids)}"
            )
        return self

    def __len__(self) -> int:
        return len(self.ids)

    def series_mask(self) -> np.ndarray:
        return np.array([t is Modality.TIME_SERIES for t in self.tags], dtype=bool)


class Vocabulary:
    """Ordered token list; id 0 is padding and id 1 is out-of-vocabulary."""

    def __init__(self, tokens: Sequence[str]):
        tokens = list(tokens)
        if tokens[:2] != [PAD_TOKEN, OOV_TOKEN]:
            raise ContractError("vocabulary must start with the pad and oov tokens")
        if len(set(tokens)) != len(tokens):
            raise ContractError("vocabulary tokens must be unique")
        self.tokens = tokens
        self._ids = {token: i for i, token in enumerate(tokens)}
        self.version = hashlib.sha256("\n".join(tokens).encode()).hexdigest()[:12]

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def id_of(self, token: str) -> int:
        return self._ids.get(token, OOV_ID)

    def token_of(self, token_id: int) -> str:
        if not 0 <= token_id < len(self.tokens):
            raise ContractError(f"token id {token_id} outside vocabulary of {len(self)}")
        return self.tokens[token_id]

    @classmethod
    def build(cls, words: Iterable[str]) -> "Vocabulary":
        """Special tokens, digits, numeric marks, punctuation, then sorted words."""
        fixed = [PAD_TOKEN, OOV_TOKEN, *NUMERIC_TOKENS, *PUNCTUATION_TOKENS]
        extra = sorted({w for w in words if w and w not in fixed})
        return cls(fixed + extra)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(self.tokens) + "\n", encoding="utf-8")
        logger.info(f"Wrote vocabulary {self.version} ({len(self)} tokens) to {path}")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        path = Path(path)
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise IoError(f"cannot read vocabulary {path}: {exc}") from exc
        return cls([line for line in lines if line])


class Tokenizer:
    def __init__(self, vocabulary: Vocabulary):
        self.vocabulary = vocabulary

    def _pieces(
        self, prompt: str, value_spans: Sequence[tuple[int, int]] | None
    ) -> list[tuple[str, Modality]]:
        pieces = []
        for match in _TOKEN_PATTERN.finditer(prompt):
            text = match.group()
            if not _NUMBER_PATTERN.fullmatch(text):
                pieces.append((text, Modality.TEXT))
                continue
            if value_spans is None:
                is_series = True
            else:
                is_series = any(
                    start <= match.start() and match.end() <= end
                    for start, end in value_spans
                )
            modality = Modality.TIME_SERIES if is_series else Modality.TEXT
            pieces.extend((char, modality) for char in text)
        return pieces

    def tokenize(
        self,
        prompt: str,
        value_spans: Sequence[tuple[int, int]] | None = None,
    ) -> TaggedTokenSequence:
        """Split ``prompt`` into tagged tokens.

        Without ``value_spans`` every number is treated as a series value;
        with spans only numbers inside a span are.
        """
        if not prompt.strip():
            raise ContractError("cannot tokenize an empty prompt")
        pieces = self._pieces(prompt, value_spans)
        return TaggedTokenSequence(
            ids=[self.vocabulary.id_of(text) for text, _ in pieces],
            tags=[modality for _, modality in pieces],
            true_length=len(pieces),
            vocab_version=self.vocabulary.version,
        )

    def detokenize(self, sequence: TaggedTokenSequence) -> str:
        """Rebuild text; spacing is approximate, token content is exact."""
        out = ""
        previous_numeric = False
        for token_id in sequence.ids[: sequence.true_length]:
            token = self.vocabulary.token_of(token_id)
            numeric = token in NUMERIC_TOKENS
            glued = (
                (numeric and previous_numeric)
                or token in PUNCTUATION_TOKENS
                or token == "."
            )
            if out and not glued:
                out += " "
            out += token
            previous_numeric = numeric
        return out


def pad_batch(
    sequences: Sequence[TaggedTokenSequence],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Right-pad a batch to its longest member.

    Returns ids (N, S), a boolean series mask (N, S) and true lengths (N,).
    """
    if not sequences:
        raise ContractError("cannot pad an empty batch")
    width = max(len(s) for s in sequences)
    ids = np.full((len(sequences), width), PAD_ID, dtype=np.int64)
    series = np.zeros((len(sequences), width), dtype=bool)
    lengths = np.zeros(len(sequences), dtype=np.int64)
    for row, seq in enumerate(sequences):
        ids[row, : len(seq)] = seq.ids
        series[row, : len(seq)] = seq.series_mask()
        lengths[row] = seq.true_length
    return ids, series, lengths
