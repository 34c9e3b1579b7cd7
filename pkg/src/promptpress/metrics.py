"""Pure scoring functions: compression rate, rate delta, n-gram overlap,
lexical F1, and embedding-based semantic F1 with greedy token matching."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class OverlapReport:
    """Clipped n-gram overlap in [0, 1] for one n-gram order."""

    n: int
    overlap: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0.0 <= self.overlap <= 1.0:
            raise ValueError(f"overlap {self.overlap} outside [0, 1]")


@dataclass(frozen=True)
class SimilarityScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "SimilarityScore":
        if precision + recall == 0.0:
            f1 = 0.0
        else:
            f1 = 2.0 * precision * recall / (precision + recall)
        return cls(precision=precision, recall=recall, f1=f1)


def compression_rate(cmpr_tokens: int, orig_tokens: int) -> float:
    """Compressed over original token count; lower means more aggressive."""
    if orig_tokens < 1:
        raise ValueError("orig_tokens must be >= 1")
    if cmpr_tokens < 0:
        raise ValueError("cmpr_tokens must be >= 0")
    return cmpr_tokens / orig_tokens


def delta_cr(real_rate: float, desired_rate: float) -> float:
    """Signed rate miss; negative means over-compression."""
    return real_rate - desired_rate


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def ngram_overlap(orig_tokens: Sequence[str], cmpr_tokens: Sequence[str], n: int) -> OverlapReport:
    """Clipped-count recall of the original's n-gram multiset.

    Returns sum(min(count_cmpr(g), count_orig(g))) / sum(count_orig(g)) over
    the original's n-grams; 0 when the original has fewer than n tokens.
    Swap the arguments for the precision orientation over the compressed text.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    orig = _ngrams(orig_tokens, n)
    total = sum(orig.values())
    if total == 0:
        return OverlapReport(n=n, overlap=0.0)
    cmpr = _ngrams(cmpr_tokens, n)
    hit = sum(min(count, cmpr[g]) for g, count in orig.items())
    return OverlapReport(n=n, overlap=hit / total)


def lexical_f1(a_tokens: Sequence[str], b_tokens: Sequence[str]) -> SimilarityScore:
    """Token-multiset precision/recall with count clipping.

    Two empty sequences count as identical (f1 = 1.0).
    """
    if not a_tokens and not b_tokens:
        return SimilarityScore(precision=1.0, recall=1.0, f1=1.0)
    if not a_tokens or not b_tokens:
        return SimilarityScore(precision=0.0, recall=0.0, f1=0.0)
    ca, cb = Counter(a_tokens), Counter(b_tokens)
    common = sum(min(count, cb[t]) for t, count in ca.items())
    return SimilarityScore.from_pr(common / len(a_tokens), common / len(b_tokens))


def semantic_f1(
    text_a: str,
    text_b: str,
    embedder,
    *,
    pieces: Callable[[str], list[str]] = str.split,
) -> SimilarityScore:
    """Greedy-matching similarity over per-piece embeddings.

    Precision is the mean over a-pieces of the max cosine to any b-piece;
    recall is symmetric. The embedder must return one unit-normalized vector
    per input string (see the clients module contract).
    """
    pa, pb = pieces(text_a), pieces(text_b)
    if not pa and not pb:
        return SimilarityScore(precision=1.0, recall=1.0, f1=1.0)
    if not pa or not pb:
        return SimilarityScore(precision=0.0, recall=0.0, f1=0.0)
    vectors = embedder.embed(pa + pb)
    a = np.asarray(vectors[: len(pa)], dtype=float)
    b = np.asarray(vectors[len(pa):], dtype=float)
    sims = a @ b.T
    precision = float(sims.max(axis=1).mean())
    recall = float(sims.max(axis=0).mean())
    return SimilarityScore.from_pr(precision, recall)
