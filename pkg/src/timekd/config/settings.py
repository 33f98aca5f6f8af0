"""
Configuration management for TimeKD runs.
"""

import json
import logging
import math
import os
from pathlib import Path
from typing import Any, Literal

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).with_name("config.yaml")

# YAML section -> fields it may hold. Sections only group keys; the
# flattened key names are what ``key = value`` files and ``--set`` use.
SECTIONS: dict[str, tuple[str, ...]] = {
    "data": (
        "dataset_path",
        "dataset_name",
        "freq",
        "freq_plural",
        "history_length",
        "horizon",
        "split_ratios",
        "train_fraction",
        "train_stride",
        "eval_stride",
        "value_decimals",
        "synthetic_seed",
        "synthetic_length",
        "synthetic_variables",
        "synthetic_noise",
    ),
    "clm": (
        "clm_hidden_dim",
        "clm_layers",
        "clm_heads",
        "clm_ffn_ratio",
        "clm_max_seq_len",
        "clm_seed",
        "delta",
        "clm_weights_path",
        "vocab_path",
    ),
    "model": (
        "model_dim",
        "teacher_layers",
        "teacher_heads",
        "student_layers",
        "student_heads",
        "ffn_ratio",
        "dropout",
        "revin_affine",
    ),
    "training": (
        "training_mode",
        "precision",
        "seeds",
        "learning_rate",
        "weight_decay",
        "beta1",
        "beta2",
        "adam_eps",
        "batch_size",
        "teacher_epochs",
        "student_epochs",
        "patience",
        "teacher_max_steps",
        "student_max_steps",
        "lambda_c",
        "lambda_e",
        "lambda_r",
        "lambda_p",
        "lambda_f",
        "prefetch_windows",
    ),
    "ablation": (
        "without_pi",
        "without_ca",
        "without_clm",
        "without_sca",
        "without_cd",
        "without_fd",
    ),
    "evaluation": ("metric_space", "report_window"),
    "output": ("output_dir", "cache_precision"),
    "logging": ("log_level", "log_format"),
}

ABLATIONS = {
    "w/o_pi": "without_pi",
    "w/o_ca": "without_ca",
    "w/o_clm": "without_clm",
    "w/o_sca": "without_sca",
    "w/o_cd": "without_cd",
    "w/o_fd": "without_fd",
}


class Settings(BaseModel):
    """Run configuration with validation. Unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    # Data
    dataset_path: Path | None = Field(
        default=None, description="CSV file; unset means the bundled synthetic series"
    )
    dataset_name: str | None = Field(default=None)
    freq: str = Field(default="hour", min_length=1, description="sampling unit in prompts")
    freq_plural: str | None = Field(default=None)
    history_length: int = Field(default=96, ge=2)
    horizon: int = Field(default=24, ge=1)
    split_ratios: list[float] | None = Field(default=None)
    train_fraction: float = Field(default=1.0, gt=0, le=1)
    train_stride: int = Field(default=1, gt=0)
    eval_stride: int = Field(default=1, gt=0)
    value_decimals: int = Field(default=3, ge=0, le=8)
    synthetic_seed: int = Field(default=0)
    synthetic_length: int = Field(default=2000, gt=0)
    synthetic_variables: int = Field(default=2, gt=0)
    synthetic_noise: float = Field(default=0.05, ge=0)

    # Calibrated language model
    clm_hidden_dim: int = Field(default=64, gt=0)
    clm_layers: int = Field(default=12, ge=0)
    clm_heads: int = Field(default=4, gt=0)
    clm_ffn_ratio: int = Field(default=4, gt=0)
    clm_max_seq_len: int = Field(default=2048, gt=0)
    clm_seed: int = Field(default=0)
    delta: float = Field(default=math.log(10.0), ge=0)
    clm_weights_path: Path | None = Field(default=None)
    vocab_path: Path | None = Field(default=None)

    # Teacher and student
    model_dim: int = Field(default=64, gt=0)
    teacher_layers: int = Field(default=2, ge=1)
    teacher_heads: int = Field(default=4, gt=0)
    student_layers: int = Field(default=2, ge=1)
    student_heads: int = Field(default=4, gt=0)
    ffn_ratio: int = Field(default=4, gt=0)
    dropout: float = Field(default=0.1, ge=0, lt=1)
    revin_affine: bool = Field(default=False)

    # Training
    training_mode: Literal["staged", "joint"] = Field(default="staged")
    precision: Literal["float32", "float64"] = Field(default="float32")
    seeds: list[int] = Field(default_factory=lambda: [0], min_length=1)
    learning_rate: float = Field(default=1e-3, gt=0)
    weight_decay: float = Field(default=0.0, ge=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    adam_eps: float = Field(default=1e-8, gt=0)
    batch_size: int = Field(default=8, gt=0)
    teacher_epochs: int = Field(default=50, gt=0)
    student_epochs: int = Field(default=50, gt=0)
    patience: int = Field(default=5, gt=0)
    teacher_max_steps: int | None = Field(default=None, gt=0)
    student_max_steps: int | None = Field(default=None, gt=0)
    lambda_c: float = Field(default=1.0, ge=0)
    lambda_e: float = Field(default=1.0, ge=0)
    lambda_r: float = Field(default=1.0, ge=0)
    lambda_p: float = Field(default=1.0, ge=0)
    lambda_f: float = Field(default=1.0, ge=0)
    prefetch_windows: int = Field(default=512, gt=0)

    # Ablation switches
    without_pi: bool = Field(default=False, description="teacher sees history only")
    without_ca: bool = Field(default=False, description="calibration off (delta = 0)")
    without_clm: bool = Field(default=False, description="linear value embeddings")
    without_sca: bool = Field(default=False, description="plain subtraction")
    without_cd: bool = Field(default=False, description="lambda_c = 0")
    without_fd: bool = Field(default=False, description="lambda_e = 0")

    # Evaluation
    metric_space: Literal["normalized", "raw"] = Field(default="normalized")
    report_window: int = Field(default=0, ge=0)

    # Output
    output_dir: Path = Field(default=Path("runs/default"))
    cache_precision: Literal["float32", "float64"] = Field(default="float32")

    # Logging
    log_level: str = Field(default="INFO")
    log_format: str = Field(
        default="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )

    @model_validator(mode="after")
    def _check_consistency(self) -> "Settings":
        if self.split_ratios is not None:
            if len(self.split_ratios) != 3 or min(self.split_ratios) < 0:
                raise ValueError("split_ratios needs three non-negative values")
            if abs(sum(self.split_ratios) - 1.0) > 1e-6:
                raise ValueError(f"split_ratios must sum to 1, got {sum(self.split_ratios)}")
        for width, heads, name in (
            (self.clm_hidden_dim, self.clm_heads, "clm_hidden_dim"),
            (self.model_dim, self.teacher_heads, "model_dim/teacher_heads"),
            (self.model_dim, self.student_heads, "model_dim/student_heads"),
        ):
            if width % heads:
                raise ValueError(f"{name}: width {width} is not divisible by {heads} heads")
        if not isinstance(logging.getLevelName(self.log_level.upper()), int):
            raise ValueError(f"unknown log level {self.log_level!r}")
        return self

    # Effective values after ablation switches

    @property
    def effective_delta(self) -> float:
        return 0.0 if self.without_ca else self.delta

    @property
    def effective_lambda_c(self) -> float:
        return 0.0 if self.without_cd else self.lambda_c

    @property
    def effective_lambda_e(self) -> float:
        return 0.0 if self.without_fd else self.lambda_e

    @property
    def numpy_dtype(self) -> np.dtype:
        return np.dtype(self.precision)

    @property
    def split_tuple(self) -> tuple[float, float, float] | None:
        return tuple(self.split_ratios) if self.split_ratios else None

    def with_overrides(self, overrides: dict[str, Any]) -> "Settings":
        """Validated copy with some keys replaced."""
        unknown = sorted(set(overrides) - set(type(self).model_fields))
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        try:
            return type(self).model_validate({**self.model_dump(), **overrides})
        except ValidationError as exc:
            raise ConfigError(validation_message(exc)) from exc

    def with_ablation(self, name: str) -> "Settings":
        """Switch on one ablation variant by its short name, e.g. ``w/o_SCA``."""
        key = ABLATIONS.get(name.strip().lower())
        if key is None:
            raise ConfigError(
                f"unknown ablation {name!r}; choose from {', '.join(sorted(ABLATIONS))}"
            )
        return self.with_overrides({key: True})

    def active_ablations(self) -> list[str]:
        return [short for short, key in ABLATIONS.items() if getattr(self, key)]

    def to_conf(self) -> str:
        """Render as ``key = value`` lines readable by ``from_conf``."""
        lines = ["# Resolved TimeKD configuration"]
        for section, keys in SECTIONS.items():
            lines.append(f"\n# {section}")
            for key in keys:
                lines.append(f"{key} = {_render_value(getattr(self, key))}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_yaml(cls, config_path: Path | str | None = None) -> "Settings":
        """Load settings from a sectioned YAML file and environment variables."""
        config_path = Path(config_path) if config_path is not None else DEFAULT_CONFIG_PATH
        try:
            with config_path.open("r", encoding="utf-8") as f:
                yaml_data = yaml.safe_load(f) or {}
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {config_path}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {config_path}: {exc}") from exc
        if not isinstance(yaml_data, dict):
            raise ConfigError(f"config at {config_path} must be a mapping")

        # Flatten nested YAML structure
        config_data: dict[str, Any] = {}
        for section, values in yaml_data.items():
            if section not in SECTIONS:
                raise ConfigError(f"unknown config section '{section}' in {config_path}")
            for key, value in (values or {}).items():
                if key not in SECTIONS[section]:
                    raise ConfigError(f"unknown key '{section}.{key}' in {config_path}")
                config_data[key] = value
        return cls._build(config_data, config_path)

    @classmethod
    def from_conf(cls, config_path: Path | str) -> "Settings":
        """Load settings from a ``key = value`` file; ``#`` starts a comment."""
        config_path = Path(config_path)
        try:
            text = config_path.read_text(encoding="utf-8")
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {config_path}") from exc

        base = cls.from_yaml().model_dump()
        config_data: dict[str, Any] = {}
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{config_path}:{number}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in cls.model_fields:
                raise ConfigError(f"{config_path}:{number}: unknown key '{key}'")
            config_data[key] = parse_value(key, value)
        return cls._build({**base, **config_data}, config_path)

    @classmethod
    def from_file(cls, config_path: Path | str | None = None) -> "Settings":
        if config_path is None or Path(config_path).suffix in (".yaml", ".yml"):
            return cls.from_yaml(config_path)
        return cls.from_conf(config_path)

    @classmethod
    def _build(cls, config_data: dict[str, Any], source: Path) -> "Settings":
        # Override with environment variables
        level_from_env = os.getenv("TIMEKD_LOG_LEVEL")
        if level_from_env:
            config_data["log_level"] = level_from_env
        output_from_env = os.getenv("TIMEKD_OUTPUT_DIR")
        if output_from_env:
            config_data["output_dir"] = output_from_env
        try:
            settings = cls(**config_data)
        except ValidationError as exc:
            raise ConfigError(f"{source}: {validation_message(exc)}") from exc
        logger.debug(f"Loaded settings from {source}")
        return settings


LIST_FIELDS = {"split_ratios", "seeds"}


def parse_value(key: str, text: str) -> Any:
    """Type a ``key = value`` right-hand side with YAML scalar rules."""
    if key in LIST_FIELDS and "," in text and not text.startswith("["):
        return [yaml.safe_load(part.strip()) for part in text.split(",")]
    try:
        value = yaml.safe_load(text) if text else None
    except yaml.YAMLError:
        value = text
    if key in LIST_FIELDS and value is not None and not isinstance(value, list):
        value = [value]
    return value


def parse_assignment(text: str) -> tuple[str, Any]:
    """Parse a CLI ``key=value`` override."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, value = (part.strip() for part in text.split("=", 1))
    return key, parse_value(key, value)


def _render_value(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return ", ".join(_render_value(v) for v in value)
    if isinstance(value, int | float):
        return repr(value)
    return json.dumps(str(value))


def validation_message(exc: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(p) for p in error['loc']) or 'config'}: {error['msg']}"
        for error in exc.errors()
    )
