"""
Prompt templates and the tagged tokenizer.
"""

from pathlib import Path

from .tokenizer import (
    OOV_ID,
    PAD_ID,
    Modality,
    TaggedTokenSequence,
    Tokenizer,
    Vocabulary,
    pad_batch,
)

PROMPTS_PATH = Path(__file__).parent / "prompts.yaml"

__all__ = [
    "OOV_ID",
    "PAD_ID",
    "PROMPTS_PATH",
    "Modality",
    "TaggedTokenSequence",
    "Tokenizer",
    "Vocabulary",
    "pad_batch",
]
