"""Ranked vocabulary construction from line-oriented corpora.

A lexicon is the frozen top-K word list that everything downstream keys
off: trie payloads, n-gram ids and engine candidates all refer to words
by their rank here. Ordering is frequency descending with lexicographic
ascending tie-break, which makes builds reproducible byte for byte.
"""

from __future__ import annotations

import logging
import os
import unicodedata
from collections import Counter
from typing import Iterable, Iterator, Optional, Union

log = logging.getLogger(__name__)

DEFAULT_CAPACITY = 100_000

CorpusSource = Union[str, os.PathLike, Iterable[str]]


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def clean_token(tok: str) -> str:
    """Strip punctuation from both edges of a token.

    Interior punctuation stays (apostrophes, hyphens); only leading and
    trailing runs are removed. May return the empty string.
    """
    start, end = 0, len(tok)
    while start < end and _is_punct(tok[start]):
        start += 1
    while end > start and _is_punct(tok[end - 1]):
        end -= 1
    return tok[start:end]


def tokenize(line: str) -> list[str]:
    """Split a sentence into word tokens.

    Whitespace split, then edge punctuation stripped per token. Tokens
    that were pure punctuation vanish.
    """
    out = []
    for raw in line.split():
        tok = clean_token(raw)
        if tok:
            out.append(tok)
    return out


def iter_lines(source: CorpusSource) -> Iterator[str]:
    """Yield decoded lines from a corpus source.

    Accepts a path (read as a file), a raw text string (split on
    newlines) or any iterable of already-decoded lines. File reads are
    binary with per-line UTF-8 decoding so one mangled line cannot kill
    the whole build; bad lines are dropped and counted by the caller via
    the sentinel None.
    """
    if isinstance(source, os.PathLike):
        with open(source, "rb") as fh:
            for raw in fh:
                try:
                    yield raw.decode("utf-8").rstrip("\n").rstrip("\r")
                except UnicodeDecodeError:
                    yield None  # type: ignore[misc]
    elif isinstance(source, str):
        yield from source.splitlines()
    else:
        yield from source


class Lexicon:
    """Immutable rank-ordered vocabulary.

    words[i] is the word at rank i, frequencies[i] its corpus count.
    """

    __slots__ = ("words", "frequencies", "_rank_of", "skipped_lines")

    def __init__(self, words: list[str], frequencies: list[int], skipped_lines: int = 0):
        if len(words) != len(frequencies):
            raise ValueError("words and frequencies length mismatch")
        self.words = tuple(words)
        self.frequencies = tuple(frequencies)
        self.skipped_lines = skipped_lines
        self._rank_of = {w: i for i, w in enumerate(self.words)}
        if len(self._rank_of) != len(self.words):
            raise ValueError("duplicate words in lexicon")

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._rank_of

    def __iter__(self):
        return iter(self.words)

    def rank(self, word: str) -> Optional[int]:
        return self._rank_of.get(word)

    def word(self, rank: int) -> str:
        return self.words[rank]

    def frequency(self, rank: int) -> int:
        return self.frequencies[rank]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Lexicon):
            return NotImplemented
        return self.words == other.words and self.frequencies == other.frequencies

    def __repr__(self) -> str:
        return f"Lexicon({len(self.words)} words)"

    @classmethod
    def from_counts(cls, counts: Counter, k: int, skipped_lines: int = 0) -> "Lexicon":
        """Freeze the top-k of a count table into rank order."""
        if k < 1:
            raise ValueError("k must be >= 1")
        ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
        return cls([w for w, _ in ordered], [c for _, c in ordered], skipped_lines)


def count_corpus(source: CorpusSource) -> tuple[Counter, int]:
    """Count surface forms in a corpus. Returns (counts, skipped_lines)."""
    counts: Counter = Counter()
    skipped = 0
    for line in iter_lines(source):
        if line is None:
            skipped += 1
            continue
        counts.update(tokenize(line))
    if skipped:
        log.warning("skipped %d undecodable corpus line(s)", skipped)
    return counts, skipped


def build_lexicon(source: CorpusSource, k: int = DEFAULT_CAPACITY) -> Lexicon:
    """Build the ranked top-k vocabulary from a corpus.

    An empty corpus yields an empty lexicon. Lines that fail UTF-8
    decoding (file sources only) are skipped and tallied on
    Lexicon.skipped_lines.
    """
    counts, skipped = count_corpus(source)
    return Lexicon.from_counts(counts, k, skipped_lines=skipped)
