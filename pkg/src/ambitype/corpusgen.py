"""Reproducible synthetic corpora for desk-scale measurement.

Real mobile-keyboard corpora are licensed server-side text, so the desk
experiments run on generated stand-ins with the two properties the
metrics actually exercise: a Zipf-shaped unigram distribution (so
frequency ranking and top-3 cutoffs mean something) and sticky word-to-
word transitions (so context-conditioned prediction beats the unigram
baseline). Text is deterministic in (profile, seed): vocabulary and
transition structure derive only from the seed, never from how many
sentences get drawn, so a testset generated later matches the training
vocabulary exactly.

Profiles build words from syllable parts:

* hindi: Devanagari consonant cores with optional dependent vowel
  signs, everything typeable on the bundled Hindi layout.
* hinglish: Latin syllables whose nuclei are the digraphs the variant
  rules care about (aa, ee, oo, ai, ...), so a healthy share of the
  vocabulary has image-preserving spelling variants.

A coverage pass enumerates the whole vocabulary at the end of the
corpus, guaranteeing every type occurs at least once; a requested
vocabulary size is then exactly the distinct-type count of the output.
"""

from __future__ import annotations

import itertools
import random
from bisect import bisect_left
from typing import Callable, Dict, Iterator, List, Optional
from zlib import crc32

ZIPF_EXPONENT = 1.25
ZIPF_SHIFT = 2.7
SENTENCE_START_EXPONENT = 2.0  # sentence openers concentrate harder still
SUCCESSORS_PER_WORD = 16
SUCCESSOR_EXPONENT = 2.0   # skew over a word's successor list
SUCCESSOR_SHIFT = 1.5
CONTINUE_P = 0.9           # chance the Markov chain follows a learned edge
COVERAGE_LINE_WORDS = 12

_DEV_CONSONANTS = "कखगघङचछजझञटठडढणतथदधनपफबभमयरलवशषसह"
_DEV_MATRAS = "ािीुूृेैोौ"
_DEV_INDEPENDENT = "अआइईउऊएओ"

_LAT_ONSETS = ("k", "kh", "g", "gh", "ch", "j", "jh", "t", "th", "d", "dh",
               "n", "p", "ph", "b", "bh", "m", "y", "r", "l", "v", "s",
               "sh", "h")
_LAT_NUCLEI = ("a", "aa", "i", "ee", "u", "oo", "e", "ai", "o", "au")
_LAT_CODAS = ("", "", "", "n", "m", "r", "l", "t", "k", "s")


def _hindi_word(rng: random.Random) -> str:
    parts = []
    if rng.random() < 0.12:
        parts.append(rng.choice(_DEV_INDEPENDENT))
    for _ in range(rng.randint(1, 3)):
        parts.append(rng.choice(_DEV_CONSONANTS))
        if rng.random() < 0.55:
            parts.append(rng.choice(_DEV_MATRAS))
    return "".join(parts)


def _hinglish_word(rng: random.Random) -> str:
    parts = []
    for _ in range(rng.randint(1, 3)):
        parts.append(rng.choice(_LAT_ONSETS))
        parts.append(rng.choice(_LAT_NUCLEI))
    parts.append(rng.choice(_LAT_CODAS))
    return "".join(parts)


PROFILES: Dict[str, Callable[[random.Random], str]] = {
    "hindi": _hindi_word,
    "hinglish": _hinglish_word,
}


def build_vocabulary(profile: str, size: int, seed: int = 0) -> List[str]:
    """The deterministic type inventory for (profile, seed), most-favored
    words first (generation order doubles as the Zipf rank order)."""
    try:
        make = PROFILES[profile]
    except KeyError:
        raise ValueError(f"unknown profile {profile!r}; have {sorted(PROFILES)}")
    if size < 1:
        raise ValueError("size must be >= 1")
    rng = random.Random(f"{seed}:vocab:{profile}")
    seen: set = set()
    out: List[str] = []
    attempts = 0
    limit = 60 * size + 1000
    while len(out) < size:
        attempts += 1
        if attempts > limit:
            raise ValueError(
                f"profile {profile!r} cannot yield {size} distinct words")
        w = make(rng)
        if w not in seen:
            seen.add(w)
            out.append(w)
    return out


class _Sampler:
    """Zipf-weighted drawing plus a lazily materialized successor graph."""

    def __init__(self, vocab: List[str], seed: int):
        self.vocab = vocab
        self.cum = list(itertools.accumulate(
            1.0 / (i + ZIPF_SHIFT) ** ZIPF_EXPONENT for i in range(len(vocab))))
        self.total = self.cum[-1]
        self.start_cum = list(itertools.accumulate(
            1.0 / (i + ZIPF_SHIFT) ** SENTENCE_START_EXPONENT
            for i in range(len(vocab))))
        self.succ_cum = list(itertools.accumulate(
            1.0 / (j + SUCCESSOR_SHIFT) ** SUCCESSOR_EXPONENT
            for j in range(SUCCESSORS_PER_WORD)))
        self.mix = crc32(f"{seed}:succ".encode()) & 0xFFFFFFFF
        self._succ: Dict[str, List[str]] = {}

    def draw(self, rng: random.Random) -> str:
        return self.vocab[bisect_left(self.cum, rng.random() * self.total)]

    def draw_start(self, rng: random.Random) -> str:
        return self.vocab[bisect_left(self.start_cum,
                                      rng.random() * self.start_cum[-1])]

    def next_after(self, word: str, rng: random.Random) -> str:
        # skewed like real continuations: a few favored followers carry
        # most of the mass, the rest are occasional
        succ = self.successors(word)
        return succ[bisect_left(self.succ_cum,
                                rng.random() * self.succ_cum[-1])]

    def successors(self, word: str) -> List[str]:
        cached = self._succ.get(word)
        if cached is None:
            # keyed by word content, not encounter order: the graph is a
            # pure function of (vocab, seed)
            r = random.Random(crc32(word.encode("utf-8")) ^ self.mix)
            cached = [self.draw(r) for _ in range(SUCCESSORS_PER_WORD)]
            self._succ[word] = cached
        return cached


def generate_corpus(profile: str, sentences: int, vocab_size: int,
                    seed: int = 0, *, coverage: bool = True,
                    text_seed: Optional[int] = None) -> Iterator[str]:
    """Yield corpus lines. The vocabulary depends only on (profile,
    vocab_size, seed); text_seed varies the drawn sentences without
    touching it, which is how held-out testsets are made. With coverage
    on, enumeration lines at the end put every vocabulary word in the
    output at least once (taking precedence over the sentence count when
    the two conflict)."""
    if sentences < 0:
        raise ValueError("sentences must be >= 0")
    vocab = build_vocabulary(profile, vocab_size, seed)
    sampler = _Sampler(vocab, seed)
    rng = random.Random(f"{text_seed if text_seed is not None else seed}"
                        f":text:{profile}")

    cover_lines: List[str] = []
    if coverage:
        order = list(vocab)
        random.Random(f"{seed}:cover:{profile}").shuffle(order)
        for i in range(0, len(order), COVERAGE_LINE_WORDS):
            cover_lines.append(" ".join(order[i:i + COVERAGE_LINE_WORDS]))

    for _ in range(max(sentences - len(cover_lines), 0)):
        length = rng.randint(4, 11)
        word = sampler.draw_start(rng)
        tokens = [word]
        for _ in range(length - 1):
            if rng.random() < CONTINUE_P:
                word = sampler.next_after(word, rng)
            else:
                word = sampler.draw(rng)
            tokens.append(word)
        yield " ".join(tokens)
    yield from cover_lines


def write_corpus(path, profile: str, sentences: int, vocab_size: int,
                 seed: int = 0, **kwargs) -> int:
    """Write one sentence per line; returns the line count."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for line in generate_corpus(profile, sentences, vocab_size, seed,
                                    **kwargs):
            fh.write(line)
            fh.write("\n")
            n += 1
    return n
