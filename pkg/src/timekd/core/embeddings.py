"""
Teacher inputs for every window, computed once per run.

The language model is frozen, so the last-token embeddings of each window's
prompts never change during training; they are encoded up front and reused
every epoch.
"""

import logging
from collections.abc import Iterator, Sequence

import numpy as np

from ..data.windows import TimeSeriesWindow
from ..errors import ContractError
from ..managers.prompts import PromptManager, RenderedPrompt
from ..models.clm import CalibratedLanguageModel
from ..prompts.tokenizer import Tokenizer

logger = logging.getLogger(__name__)


class EmbeddingStore:
    """Aligned (W, N, ·) teacher inputs and (W, G, N) normalized targets."""

    def __init__(self, l_gt: np.ndarray, l_hd: np.ndarray, targets: np.ndarray):
        if not (len(l_gt) == len(l_hd) == len(targets)):
            raise ContractError("embedding store arrays must have the same length")
        self.l_gt = l_gt
        self.l_hd = l_hd
        self.targets = targets

    def __len__(self) -> int:
        return len(self.targets)

    def batch(self, positions: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.l_gt[positions], self.l_hd[positions], self.targets[positions]

    def batches(
        self, batch_size: int, rng: np.random.Generator | None = None
    ) -> Iterator[np.ndarray]:
        """Position batches; shuffled when ``rng`` is given."""
        order = rng.permutation(len(self)) if rng is not None else np.arange(len(self))
        for start in range(0, len(order), batch_size):
            yield order[start : start + batch_size]


def normalized_targets(windows: Sequence[TimeSeriesWindow]) -> np.ndarray:
    return np.stack([w.normalized_target() for w in windows])


def series_store(
    windows: Sequence[TimeSeriesWindow], privileged: bool, dtype: np.dtype
) -> EmbeddingStore:
    """Raw normalized value vectors, used when the language model is ablated."""
    if not windows:
        raise ContractError("cannot build an embedding store without windows")
    history = np.stack([w.normalized_history().T for w in windows])
    if privileged:
        future = np.stack([w.normalized_target().T for w in windows])
        groundtruth = np.concatenate([history, future], axis=-1)
    else:
        groundtruth = history
    return EmbeddingStore(
        groundtruth.astype(dtype), history.astype(dtype), normalized_targets(windows).astype(dtype)
    )


class PromptEmbedder:
    """Renders, tokenizes and encodes each variable's history and ground-truth prompts."""

    def __init__(
        self,
        clm: CalibratedLanguageModel,
        tokenizer: Tokenizer,
        prompt_manager: PromptManager,
        freq: str,
        freq_plural: str | None = None,
        privileged: bool = True,
        chunk_size: int = 8,
    ):
        self.clm = clm
        self.tokenizer = tokenizer
        self.prompt_manager = prompt_manager
        self.freq = freq
        self.freq_plural = freq_plural
        self.privileged = privileged
        self.chunk_size = chunk_size

    def prompts(self, window: TimeSeriesWindow) -> tuple[list[RenderedPrompt], list[RenderedPrompt]]:
        """Per-variable (history prompts, ground-truth prompts) in raw units."""
        history, groundtruth = [], []
        for n in range(window.num_variables):
            past = window.x_h[:, n]
            hd = self.prompt_manager.render_history(
                past, self.freq, window.horizon, self.freq_plural
            )
            history.append(hd)
            if self.privileged:
                groundtruth.append(
                    self.prompt_manager.render_groundtruth(
                        past, window.x_g[:, n], self.freq, self.freq_plural
                    )
                )
            else:
                groundtruth.append(hd)
        return history, groundtruth

    def embed_windows(
        self, windows: Sequence[TimeSeriesWindow]
    ) -> tuple[np.ndarray, np.ndarray]:
        """Last-token embeddings (W, N, D) for ground-truth and history prompts."""
        sequences = []
        for window in windows:
            history, groundtruth = self.prompts(window)
            for prompt in (*groundtruth, *history):
                sequences.append(self.tokenizer.tokenize(prompt.text, prompt.value_spans))
        last = self.clm.encode(sequences).last_token()
        n = windows[0].num_variables
        per_window = last.reshape(len(windows), 2 * n, -1)
        return per_window[:, :n], per_window[:, n:]

    def build_store(self, windows: Sequence[TimeSeriesWindow], dtype: np.dtype) -> EmbeddingStore:
        if not windows:
            raise ContractError("cannot build an embedding store without windows")
        gt_parts, hd_parts = [], []
        for start in range(0, len(windows), self.chunk_size):
            l_gt, l_hd = self.embed_windows(windows[start : start + self.chunk_size])
            gt_parts.append(l_gt)
            hd_parts.append(l_hd)
        logger.info(
            f"Encoded prompts for {len(windows)} windows "
            f"({'privileged' if self.privileged else 'history-only'} ground truth)"
        )
        return EmbeddingStore(
            np.concatenate(gt_parts).astype(dtype),
            np.concatenate(hd_parts).astype(dtype),
            normalized_targets(windows).astype(dtype),
        )
