"""
TimeKD - privileged knowledge distillation from a calibrated language model
teacher into a Transformer forecaster.
"""

from .config import Settings
from .core import MetricsReport, PrivilegedArtifact, TimeKDPipeline
from .errors import TimeKDError
from .managers import ArtifactCache, CheckpointManager, PromptManager
from .models import CalibratedLanguageModel, CrossModalityTeacher, TimeSeriesStudent

__version__ = "0.1.0"

__all__ = [
    "Settings",
    "MetricsReport",
    "PrivilegedArtifact",
    "TimeKDPipeline",
    "TimeKDError",
    "ArtifactCache",
    "CheckpointManager",
    "PromptManager",
    "CalibratedLanguageModel",
    "CrossModalityTeacher",
    "TimeSeriesStudent",
]
