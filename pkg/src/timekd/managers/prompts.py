"""
Prompt manager for loading templates from YAML and rendering value prompts.
"""

import logging
import re
import string
from collections.abc import Sequence
from pathlib import Path

import yaml
from pydantic import BaseModel, Field

from ..errors import ConfigError, ContractError
from ..prompts import PROMPTS_PATH

logger = logging.getLogger(__name__)

HISTORY_PROMPT = "history_prompt"
GROUNDTRUTH_PROMPT = "groundtruth_prompt"
SERIES_FIELDS = ("history", "future")


class RenderedPrompt(BaseModel):
    """Prompt text plus the character spans that hold rendered values."""

    text: str
    value_spans: list[tuple[int, int]] = Field(default_factory=list)


def pluralize(freq: str) -> str:
    return freq if freq.endswith("s") else f"{freq}s"


def join_values(items: Sequence[str]) -> str:
    """``a``, ``a and b``, ``a, b, and c``."""
    if len(items) == 1:
        return items[0]
    if len(items) == 2:
        return f"{items[0]} and {items[1]}"
    return ", ".join(items[:-1]) + f", and {items[-1]}"


class PromptManager:
    """Loads prompt templates from YAML and renders them for a value series."""

    def __init__(self, prompts_path: Path | None = None, decimals: int = 3):
        self.prompts_path = Path(prompts_path or PROMPTS_PATH)
        self.decimals = decimals
        self._prompts: dict | None = None

    def load_prompts(self) -> dict:
        """Load prompts from YAML file."""
        if self._prompts is not None:
            return self._prompts

        try:
            with self.prompts_path.open("r", encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except FileNotFoundError as exc:
            logger.error(f"Prompt configuration missing at {self.prompts_path}")
            raise ConfigError(
                f"Prompt configuration missing at {self.prompts_path}"
            ) from exc

        if not isinstance(data, dict):
            raise ConfigError(
                f"Prompt configuration at {self.prompts_path} must be a mapping"
            )

        self._prompts = data
        logger.info(f"Loaded {len(self._prompts)} prompt entries from {self.prompts_path}")
        return self._prompts

    def get_prompt(self, name: str) -> str:
        """Retrieve a specific template by name."""
        prompts = self.load_prompts()
        template = prompts.get(name)
        if not isinstance(template, str):
            logger.error(f"Prompt '{name}' not found in {self.prompts_path}")
            raise ConfigError(f"Prompt '{name}' is not defined in {self.prompts_path}")
        return template

    def frequency_words(self) -> list[str]:
        return [str(w) for w in self.load_prompts().get("frequency_words", [])]

    def template_words(self) -> set[str]:
        """Every alphabetic word appearing in a template's literal text."""
        words: set[str] = set()
        for value in self.load_prompts().values():
            if not isinstance(value, str):
                continue
            for literal, _, _, _ in string.Formatter().parse(value):
                words.update(re.findall(r"[A-Za-z]+", literal))
        return words

    def format_value(self, value: float) -> str:
        return f"{value:.{self.decimals}f}"

    def render(
        self,
        name: str,
        series: dict[str, Sequence[float]],
        **fields: object,
    ) -> RenderedPrompt:
        """Fill a template; list fields in ``series`` record their value spans."""
        pieces: list[str] = []
        spans: list[tuple[int, int]] = []
        cursor = 0
        for literal, field, _, _ in string.Formatter().parse(self.get_prompt(name)):
            pieces.append(literal)
            cursor += len(literal)
            if field is None:
                continue
            if field in series:
                values = [self.format_value(float(v)) for v in series[field]]
                if not values:
                    raise ContractError(f"prompt field '{field}' needs at least one value")
                rendered = join_values(values)
                offset = cursor
                for value in values:
                    start = rendered.index(value, offset - cursor) + cursor
                    spans.append((start, start + len(value)))
                    offset = start + len(value)
            elif field in fields:
                rendered = str(fields[field])
            else:
                raise ConfigError(f"Prompt '{name}' uses unknown field '{field}'")
            pieces.append(rendered)
            cursor += len(rendered)
        return RenderedPrompt(text="".join(pieces), value_spans=spans)

    def render_history(
        self,
        values: Sequence[float],
        freq: str,
        horizon: int,
        freq_plural: str | None = None,
    ) -> RenderedPrompt:
        if horizon < 1:
            raise ContractError(f"horizon must be positive, got {horizon}")
        return self.render(
            HISTORY_PROMPT,
            {"history": values},
            freq=freq,
            freq_plural=freq_plural or pluralize(freq),
            horizon=horizon,
        )

    def render_groundtruth(
        self,
        history: Sequence[float],
        future: Sequence[float],
        freq: str,
        freq_plural: str | None = None,
    ) -> RenderedPrompt:
        return self.render(
            GROUNDTRUTH_PROMPT,
            {"history": history, "future": future},
            freq=freq,
            freq_plural=freq_plural or pluralize(freq),
            horizon=len(future),
        )


_default_manager: PromptManager | None = None


def _manager() -> PromptManager:
    global _default_manager
    if _default_manager is None:
        _default_manager = PromptManager()
    return _default_manager


def render_history_prompt(values: Sequence[float], freq: str, horizon: int) -> str:
    return _manager().render_history(values, freq, horizon).text


def render_groundtruth_prompt(
    history: Sequence[float], future: Sequence[float], freq: str
) -> str:
    return _manager().render_groundtruth(history, future, freq).text
