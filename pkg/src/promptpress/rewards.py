"""Reward functions for rate-adherent compression.

The length reward penalizes exceeding the target rate only; the quality
reward maps the mean answer-token log-probability into (0, 1]; the combined
signal is their sum. Chunk adherence is the same penalty applied to realized
rates, averaged up to transcript level.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from typing import MutableMapping, Sequence

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnswerLogprobs:
    """Per-token log P(token | context, prefix) for a scored continuation."""

    tokens: tuple[str, ...]
    logprobs: tuple[float, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.logprobs):
            raise ValueError("tokens and logprobs must have equal length")
        if not self.tokens:
            raise ValueError("empty answer cannot be scored")
        bad = [lp for lp in self.logprobs if lp > 0.0]
        if bad:
            raise ValueError(f"log probabilities must be <= 0, got {bad[:3]}")

    @property
    def mean_logprob(self) -> float:
        return sum(self.logprobs) / len(self.logprobs)


def length_reward(r_c: float, r_t: float) -> float:
    """1 - max(0, r_c - r_t): full reward at or under the target rate."""
    if r_c < 0.0:
        raise ValueError("realized rate must be >= 0")
    if not 0.0 < r_t <= 1.0:
        raise ValueError("target rate must be in (0, 1]")
    return 1.0 - max(0.0, r_c - r_t)


def quality_reward(al: AnswerLogprobs) -> float:
    """1 / (1 - mean logprob); in (0, 1], equal to 1 only for certain tokens."""
    return 1.0 / (1.0 - al.mean_logprob)


def combined_reward(length: float, quality: float) -> float:
    return length + quality


def chunk_adherence(r_act: float, r_tgt: float) -> float:
    """Per-chunk adherence: identical functional form to the length reward."""
    return length_reward(r_act, r_tgt)


def transcript_adherence(chunk_values: Sequence[float]) -> float:
    """Mean of the per-chunk adherence values."""
    if not chunk_values:
        raise ValueError("transcript has no chunk adherence values")
    return sum(chunk_values) / len(chunk_values)


@dataclass(frozen=True)
class RewardBreakdown:
    """All reward components for one compressed chunk."""

    length_reward: float
    quality_reward: float
    combined: float
    adherence: float

    @classmethod
    def compute(cls, r_c: float, r_t: float, al: AnswerLogprobs) -> "RewardBreakdown":
        lr = length_reward(r_c, r_t)
        qr = quality_reward(al)
        return cls(
            length_reward=lr,
            quality_reward=qr,
            combined=combined_reward(lr, qr),
            adherence=chunk_adherence(r_c, r_t),
        )


DEFAULT_SUMMARY_INSTRUCTION = "Write a concise summary of the following text."

# Original-text summaries keyed by (original digest, summarizer model,
# instruction); regenerating them dominates the cost of this reward.
_summary_cache: dict[tuple[str, str, str], str] = {}


def clear_summary_cache() -> None:
    _summary_cache.clear()


def summary_quality_reward(
    original: str,
    compressed: str,
    summarizer,
    scorer,
    summary_instruction: str = DEFAULT_SUMMARY_INSTRUCTION,
    *,
    cache: MutableMapping[tuple[str, str, str], str] | None = None,
) -> float:
    """Quality reward of ``compressed`` against a summary of ``original``.

    The summary is generated once from the uncompressed text, then its
    tokens are scored conditioned on the instruction plus the compressed
    text. High reward means the compression still supports the original's
    summary.
    """
    if cache is None:
        cache = _summary_cache
    key = (
        hashlib.sha256(original.encode("utf-8")).hexdigest(),
        summarizer.config.model,
        summary_instruction,
    )
    summary = cache.get(key)
    if summary is None:
        exchange = summarizer.chat(
            system="",
            user=f"{summary_instruction}\n\n{original}",
            temperature=0.0,
        )
        summary = exchange.response_text
        if not summary.strip():
            raise ValueError("summarizer returned an empty summary")
        cache[key] = summary
    context = f"{summary_instruction}\n\n{compressed}\n\n"
    scored = scorer.score_continuation(context, summary)
    return quality_reward(AnswerLogprobs(tuple(scored.token_pieces), tuple(scored.logprobs)))


def answer_quality_reward(question: str, compressed: str, answer: str, scorer) -> float:
    """Question-conditioned variant of the quality reward.

    Kept for study only: optimizing against it invites answer-enumeration
    gaming, so the summary-based reward is the default signal.
    """
    context = f"{question}\n\n{compressed}\n\n"
    scored = scorer.score_continuation(context, answer)
    return quality_reward(AnswerLogprobs(tuple(scored.token_pieces), tuple(scored.logprobs)))
