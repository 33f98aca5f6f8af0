"""
Manager classes for prompts, checkpoints and the artifact cache.
"""

from .cache import ArtifactCache, CacheReader, cache_read, cache_write, config_hash
from .checkpoints import (
    STUDENT_MAGIC,
    TEACHER_MAGIC,
    WEIGHTS_MAGIC,
    CheckpointManager,
)
from .prompts import PromptManager, render_groundtruth_prompt, render_history_prompt

__all__ = [
    "STUDENT_MAGIC",
    "TEACHER_MAGIC",
    "WEIGHTS_MAGIC",
    "ArtifactCache",
    "CacheReader",
    "CheckpointManager",
    "PromptManager",
    "cache_read",
    "cache_write",
    "config_hash",
    "render_groundtruth_prompt",
    "render_history_prompt",
]
