"""
Training package - losses, teacher training and privileged distillation.
"""

from .distill import JointTrainer, StudentTrainer, forecast_validation_loss
from .early_stopping import EarlyStopping, TrainingHistory
from .hyperparams import HyperParams
from .losses import (
    correlation_loss,
    feature_loss,
    forecast_loss,
    pkd_loss,
    reconstruction_loss,
    total_loss,
)
from .teacher_trainer import TeacherTrainer

__all__ = [
    "EarlyStopping",
    "HyperParams",
    "JointTrainer",
    "StudentTrainer",
    "TeacherTrainer",
    "TrainingHistory",
    "correlation_loss",
    "feature_loss",
    "forecast_loss",
    "forecast_validation_loss",
    "pkd_loss",
    "reconstruction_loss",
    "total_loss",
]
