"""Token counting, sentence segmentation, and sentence-preserving chunking.

Nothing here fixes a particular tokenizer: every operation takes one
explicitly, and run manifests record which one produced each number. Two
implementations ship — a whitespace tokenizer used as the testing reference
and a loadable BPE vocabulary for more realistic counts.
"""

from __future__ import annotations

import hashlib
import re
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

_WORD_RE = re.compile(r"\S+")
_TERMINAL = ".!?"
_WORD_END = "</w>"

DEFAULT_JOINER = " "


class Tokenizer(ABC):
    """Deterministic mapping from text to token ids and surface pieces.

    ``pieces`` and ``encode`` are index-aligned; ``token_count(t)`` always
    equals ``len(encode(t))``. Implementations are stateless apart from
    caches and safe to share between threads.
    """

    id: str

    @abstractmethod
    def encode(self, text: str) -> list[int]:
        """Token ids for ``text``."""

    @abstractmethod
    def pieces(self, text: str) -> list[str]:
        """Surface piece strings, aligned with ``encode``."""

    @abstractmethod
    def piece_spans(self, text: str) -> list[tuple[int, int]]:
        """Character span ``(start, end)`` of each piece within ``text``."""

    @abstractmethod
    def detokenize(self, pieces: Sequence[str]) -> str:
        """Surface text for a sequence of pieces."""

    def token_count(self, text: str) -> int:
        return len(self.encode(text))


def count_tokens(text: str, tokenizer: Tokenizer) -> int:
    """Number of tokens ``tokenizer`` assigns to ``text`` (0 for empty)."""
    return tokenizer.token_count(text)


def _stable_id(piece: str) -> int:
    return int.from_bytes(hashlib.blake2b(piece.encode("utf-8"), digest_size=8).digest(), "big")


class WhitespaceTokenizer(Tokenizer):
    """Reference tokenizer: one token per whitespace-delimited word."""

    id = "whitespace"

    def encode(self, text: str) -> list[int]:
        return [_stable_id(w) for w in text.split()]

    def pieces(self, text: str) -> list[str]:
        return text.split()

    def piece_spans(self, text: str) -> list[tuple[int, int]]:
        return [m.span() for m in _WORD_RE.finditer(text)]

    def detokenize(self, pieces: Sequence[str]) -> str:
        return " ".join(pieces)

    def token_count(self, text: str) -> int:
        return len(text.split())


class BpeTokenizer(Tokenizer):
    """Byte-pair tokenizer over whitespace-delimited words.

    Words are split to characters with a ``</w>`` marker on the final one,
    then merged greedily by merge rank. Unknown symbols keep their surface
    form (so extraction stays lossless) but map to the reserved unknown id.
    """

    UNK = "<unk>"

    def __init__(self, merges: Sequence[tuple[str, str]], vocab: dict[str, int], id: str | None = None):
        self.merges = list(merges)
        self.vocab = dict(vocab)
        if self.UNK not in self.vocab:
            raise ValueError(f"vocab must contain the {self.UNK} entry")
        self._ranks = {pair: i for i, pair in enumerate(self.merges)}
        self._word_cache: dict[str, tuple[str, ...]] = {}
        self.id = id or f"bpe-{self._fingerprint()}"

    def _fingerprint(self) -> str:
        h = hashlib.sha256()
        for a, b in self.merges:
            h.update(f"{a} {b}\n".encode("utf-8"))
        for tok, idx in sorted(self.vocab.items()):
            h.update(f"{tok}\t{idx}\n".encode("utf-8"))
        return h.hexdigest()[:12]

    def _encode_word(self, word: str) -> tuple[str, ...]:
        cached = self._word_cache.get(word)
        if cached is not None:
            return cached
        symbols = list(word[:-1]) + [word[-1] + _WORD_END]
        while len(symbols) > 1:
            best = None
            best_rank = None
            for pair in zip(symbols, symbols[1:]):
                rank = self._ranks.get(pair)
                if rank is not None and (best_rank is None or rank < best_rank):
                    best, best_rank = pair, rank
            if best is None:
                break
            merged: list[str] = []
            i = 0
            while i < len(symbols):
                if i + 1 < len(symbols) and (symbols[i], symbols[i + 1]) == best:
                    merged.append(symbols[i] + symbols[i + 1])
                    i += 2
                else:
                    merged.append(symbols[i])
                    i += 1
            symbols = merged
        result = tuple(symbols)
        self._word_cache[word] = result
        return result

    def pieces(self, text: str) -> list[str]:
        out: list[str] = []
        for word in text.split():
            out.extend(self._encode_word(word))
        return out

    def encode(self, text: str) -> list[int]:
        unk = self.vocab[self.UNK]
        return [self.vocab.get(p, unk) for p in self.pieces(text)]

    def piece_spans(self, text: str) -> list[tuple[int, int]]:
        spans: list[tuple[int, int]] = []
        for m in _WORD_RE.finditer(text):
            pos = m.start()
            for piece in self._encode_word(m.group()):
                width = len(piece.removesuffix(_WORD_END))
                spans.append((pos, pos + width))
                pos += width
        return spans

    def detokenize(self, pieces: Sequence[str]) -> str:
        return "".join(p.replace(_WORD_END, " ") for p in pieces).strip()

    def save(self, path: str | Path) -> None:
        lines = ["#bpe v1", "#merges"]
        lines += [f"{a} {b}" for a, b in self.merges]
        lines.append("#vocab")
        lines += [f"{tok}\t{idx}" for tok, idx in sorted(self.vocab.items(), key=lambda kv: kv[1])]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path, id: str | None = None) -> "BpeTokenizer":
        merges: list[tuple[str, str]] = []
        vocab: dict[str, int] = {}
        section = None
        for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
            line = raw.rstrip("\n")
            if not line or line == "#bpe v1":
                continue
            if line in ("#merges", "#vocab"):
                section = line
                continue
            if section == "#merges":
                parts = line.split(" ")
                if len(parts) != 2:
                    raise ValueError(f"{path}:{lineno}: malformed merge line {line!r}")
                merges.append((parts[0], parts[1]))
            elif section == "#vocab":
                tok, sep, idx = line.partition("\t")
                if not sep:
                    raise ValueError(f"{path}:{lineno}: malformed vocab line {line!r}")
                vocab[tok] = int(idx)
            else:
                raise ValueError(f"{path}:{lineno}: content before a section header")
        return cls(merges, vocab, id=id)


def train_bpe(corpus: Iterable[str], num_merges: int) -> BpeTokenizer:
    """Learn a BPE vocabulary from raw text by most-frequent pair merging.

    Ties break lexicographically so training is deterministic for a fixed
    corpus. Intended for producing vocabulary assets, not for competing with
    production tokenizers.
    """
    word_freq = Counter()
    for text in corpus:
        word_freq.update(text.split())
    seqs: dict[tuple[str, ...], int] = {}
    for word, freq in word_freq.items():
        key = tuple(list(word[:-1]) + [word[-1] + _WORD_END])
        seqs[key] = seqs.get(key, 0) + freq
    merges: list[tuple[str, str]] = []
    for _ in range(num_merges):
        pair_freq = Counter()
        for seq, freq in seqs.items():
            for pair in zip(seq, seq[1:]):
                pair_freq[pair] += freq
        if not pair_freq:
            break
        best_count = max(pair_freq.values())
        best = min(p for p, c in pair_freq.items() if c == best_count)
        merges.append(best)
        merged_sym = best[0] + best[1]
        new_seqs: dict[tuple[str, ...], int] = {}
        for seq, freq in seqs.items():
            out: list[str] = []
            i = 0
            while i < len(seq):
                if i + 1 < len(seq) and (seq[i], seq[i + 1]) == best:
                    out.append(merged_sym)
                    i += 2
                else:
                    out.append(seq[i])
                    i += 1
            key = tuple(out)
            new_seqs[key] = new_seqs.get(key, 0) + freq
        seqs = new_seqs
    symbols: set[str] = set()
    for seq in seqs:
        symbols.update(seq)
    for word in word_freq:
        symbols.update(word[:-1])
        symbols.add(word[-1] + _WORD_END)
    vocab = {BpeTokenizer.UNK: 0}
    for i, sym in enumerate(sorted(symbols), start=1):
        vocab[sym] = i
    return BpeTokenizer(merges, vocab)


@dataclass(frozen=True)
class SentenceSpan:
    """Character range [start, end) of one sentence; spans never overlap."""

    start: int
    end: int

    def __post_init__(self):
        if self.start >= self.end:
            raise ValueError("empty or inverted span")


def split_sentences(text: str) -> list[SentenceSpan]:
    """Sentence spans covering all non-separator text, in order.

    A sentence ends after a run of terminal punctuation (., !, ?) followed
    by whitespace or end of text, or at a hard newline. Text without any
    boundary yields a single span.
    """
    spans: list[SentenceSpan] = []
    start: int | None = None
    n = len(text)

    def close(end: int) -> None:
        nonlocal start
        if start is None:
            return
        while end > start and text[end - 1].isspace():
            end -= 1
        if end > start:
            spans.append(SentenceSpan(start, end))
        start = None

    i = 0
    while i < n:
        ch = text[i]
        if ch == "\n":
            close(i)
            i += 1
            continue
        if start is None and not ch.isspace():
            start = i
        if ch in _TERMINAL and start is not None:
            j = i
            while j + 1 < n and text[j + 1] in _TERMINAL:
                j += 1
            if j + 1 >= n or text[j + 1].isspace():
                close(j + 1)
            i = j + 1
            continue
        i += 1
    close(n)
    return spans


def normalize_lines(text: str) -> str:
    """CRLF to LF and strip trailing whitespace from every line."""
    unified = text.replace("\r\n", "\n").replace("\r", "\n")
    return "\n".join(line.rstrip() for line in unified.split("\n"))


def normalize_document(text: str, joiner: str = DEFAULT_JOINER) -> str:
    """Canonical document form: sentences joined by the chunk joiner.

    This is the exact text that reassembling a chunked document reproduces;
    inter-sentence separators are canonicalized so the reassembly invariant
    is bit-testable.
    """
    lines = normalize_lines(text)
    return joiner.join(lines[s.start:s.end] for s in split_sentences(lines))


@dataclass(frozen=True)
class Chunk:
    """One contiguous run of sentences (or over-long-sentence fragments)."""

    index: int
    text: str
    token_count: int


@dataclass(frozen=True)
class ChunkedDocument:
    source_id: str
    chunks: tuple[Chunk, ...]
    joiner: str = DEFAULT_JOINER

    def reassemble(self) -> str:
        return self.joiner.join(c.text for c in self.chunks)

    @property
    def total_tokens(self) -> int:
        return sum(c.token_count for c in self.chunks)


def _split_overlong(sentence: str, tokenizer: Tokenizer, budget: int) -> list[str]:
    spans = tokenizer.piece_spans(sentence)
    frags = []
    for i in range(0, len(spans), budget):
        group = spans[i:i + budget]
        frags.append(sentence[group[0][0]:group[-1][1]])
    return frags


def chunk_document(
    text: str,
    tokenizer: Tokenizer,
    max_chunk_tokens: int,
    *,
    source_id: str = "doc",
    joiner: str = DEFAULT_JOINER,
) -> ChunkedDocument:
    """Greedy sentence-preserving chunking under a token budget.

    Sentences are appended to the current chunk while the chunk's token
    count stays within the budget; a sentence that would overflow starts a
    new chunk. A single sentence longer than the budget is split at token
    boundaries into budget-sized fragments that rejoin the greedy stream.
    """
    if max_chunk_tokens < 1:
        raise ValueError("max_chunk_tokens must be >= 1")
    normalized = normalize_lines(text)
    units: list[str] = []
    for span in split_sentences(normalized):
        sentence = normalized[span.start:span.end]
        if tokenizer.token_count(sentence) > max_chunk_tokens:
            units.extend(_split_overlong(sentence, tokenizer, max_chunk_tokens))
        else:
            units.append(sentence)

    texts: list[str] = []
    current: str | None = None
    for unit in units:
        if current is None:
            current = unit
            continue
        candidate = current + joiner + unit
        if tokenizer.token_count(candidate) <= max_chunk_tokens:
            current = candidate
        else:
            texts.append(current)
            current = unit
    if current is not None:
        texts.append(current)

    chunks = tuple(
        Chunk(index=i, text=t, token_count=tokenizer.token_count(t)) for i, t in enumerate(texts)
    )
    return ChunkedDocument(source_id=source_id, chunks=chunks, joiner=joiner)
