"""
Models package - calibrated language model, cross-modality teacher and student.
"""

from .clm import (
    CalibratedLanguageModel,
    ClmConfig,
    ClmOutput,
    build_mask,
    calibrated_attention,
    clm_encode,
    extract_last_token,
)
from .revin import RevIN, RevinStats, revin_denormalize, revin_normalize
from .sca import SubtractiveCrossAttention
from .student import StudentConfig, StudentOutput, TimeSeriesStudent
from .teacher import CrossModalityTeacher, TeacherConfig, TeacherOutput

__all__ = [
    "CalibratedLanguageModel",
    "ClmConfig",
    "ClmOutput",
    "CrossModalityTeacher",
    "RevIN",
    "RevinStats",
    "StudentConfig",
    "StudentOutput",
    "SubtractiveCrossAttention",
    "TeacherConfig",
    "TeacherOutput",
    "TimeSeriesStudent",
    "build_mask",
    "calibrated_attention",
    "clm_encode",
    "extract_last_token",
    "revin_denormalize",
    "revin_normalize",
]
