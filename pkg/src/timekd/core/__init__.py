"""
Core pipeline logic for TimeKD runs.
"""

from .models import DatasetSummary, MetricsReport, PrivilegedArtifact, TrainingSummary
from .pipeline import RunPaths, TimeKDPipeline

__all__ = [
    "DatasetSummary",
    "MetricsReport",
    "PrivilegedArtifact",
    "RunPaths",
    "TimeKDPipeline",
    "TrainingSummary",
]
