"""Typing sessions: keystroke handling, candidate ranking, correction.

Two session modes share one candidate pipeline. On an ambiguous keypad
the composing string is the sequence of representative codepoints the
user tapped, which is by construction the transformed prefix of every
intended word, so candidates come straight from a shadow-trie prefix
search. In romanized mode the composing string is raw Latin; candidates
merge direct vocabulary prefix matches, shadow matches of the rewritten
base form (catching spelling variants), and words this user previously
committed.

Scores are log-space: language model score, minus a per-remaining-char
completion penalty, minus an edit-distance penalty for candidates that
do not extend the typed prefix verbatim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

from .errors import InputError
from .lm import (UserModel, context_continuation_ids, learn_commit, lm_score,
                 predict_next)
from .modelfile import MODE_NATIVE, MODE_ROMANIZED, ModelSet
from .rules import transform

SOURCE_VOCAB = "vocab-exact"
SOURCE_SHADOW = "shadow"
SOURCE_USER = "user"

EDIT_DISTANCE_CAP = 3  # reported distances saturate here


@dataclass(frozen=True)
class EngineConfig:
    max_candidates: int = 3
    lambda_len: float = 0.1          # completion penalty per uncommitted char
    mu_edit: float = 1.0             # penalty per edit between typed and candidate
    auto_correct_max_distance: int = 1
    correction_max_distance: int = 2
    fetch_limit: int = 64            # trie hits examined before rescoring
    context_fetch_limit: int = 96    # context continuations examined besides

    def __post_init__(self):
        if not 0 <= self.auto_correct_max_distance <= self.correction_max_distance:
            raise ValueError(
                "need 0 <= auto_correct_max_distance <= correction_max_distance")
        if self.max_candidates < 1:
            raise ValueError("max_candidates must be >= 1")
        if self.fetch_limit < self.max_candidates:
            raise ValueError("fetch_limit must cover max_candidates")
        if self.context_fetch_limit < 0:
            raise ValueError("context_fetch_limit must be >= 0")


class Candidate(NamedTuple):
    surface: str
    rank_index: Optional[int]
    score: float
    source: str
    edit_distance: int


class CorrectionDecision(NamedTuple):
    action: str                # "accept" | "auto-correct" | "offer"
    surface: str               # the token that should be committed
    offers: Tuple[str, ...]    # nonempty only for "offer"


def osa_distance(a: str, b: str) -> int:
    """Edit distance with insert, delete, substitute, adjacent swap."""
    m, n = len(a), len(b)
    if m == 0:
        return n
    if n == 0:
        return m
    prev_prev: list = []
    prev = list(range(n + 1))
    for i in range(1, m + 1):
        cur = [i] + [0] * n
        ai = a[i - 1]
        for j in range(1, n + 1):
            cost = 0 if ai == b[j - 1] else 1
            best = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            if i > 1 and j > 1 and ai == b[j - 2] and a[i - 2] == b[j - 1]:
                t = prev_prev[j - 2] + 1
                if t < best:
                    best = t
            cur[j] = best
        prev_prev, prev = prev, cur
    return prev[n]


def prefix_osa(token: str, word: str) -> int:
    """Distance from token to the closest prefix of word.

    Zero when token is literally a prefix; small when the typed text
    diverges from the candidate only by typo-scale edits.
    """
    m, n = len(word), len(token)
    if n == 0:
        return 0
    best = n  # the empty prefix
    prev_prev: list = []
    prev = list(range(n + 1))
    for i in range(1, m + 1):
        cur = [i] + [0] * n
        wi = word[i - 1]
        for j in range(1, n + 1):
            cost = 0 if wi == token[j - 1] else 1
            b = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            if i > 1 and j > 1 and wi == token[j - 2] and word[i - 2] == token[j - 1]:
                t = prev_prev[j - 2] + 1
                if t < b:
                    b = t
            cur[j] = b
        if cur[n] < best:
            best = cur[n]
        prev_prev, prev = prev, cur
    return best


def _sort_key(c: Candidate):
    rank = c.rank_index if c.rank_index is not None else math.inf
    return (-c.score, rank, c.surface)


def normalize_context(tokens: List[str], model: ModelSet) -> List[str]:
    """Swap each out-of-vocabulary context token for its best in-vocab twin.

    A token's rewritten base form is looked up exactly in the shadow
    trie; among the words sharing that base, the one scoring highest
    against the already-normalized prefix (ties to the lower rank) wins.
    Tokens with no twin stay put. Deliberately ignores the user model so
    every session normalizes identically.
    """
    out: List[str] = []
    lex = model.lexicon
    for tok in tokens:
        if tok in lex:
            out.append(tok)
            continue
        base = transform(tok, model.ruleset)
        idxs = model.tries.shadow.lookup(base)
        if not idxs:
            out.append(tok)
            continue
        best = max(idxs, key=lambda i: (
            lm_score(model.ngram, None, out, lex.word(i)), -i))
        out.append(lex.word(best))
    return out


def auto_correct(token: str, candidates: List[Candidate],
                 config: EngineConfig, model: ModelSet) -> CorrectionDecision:
    """Commit-boundary decision for a completed token.

    In-vocabulary tokens pass through. A candidate sharing the token's
    exact base form within the tight distance bound replaces it
    silently; anything else within the looser bound is only offered, and
    with no plausible candidate the token is kept as typed.
    """
    lex = model.lexicon
    if token in lex:
        return CorrectionDecision("accept", token, ())
    base = transform(token, model.ruleset)
    for c in candidates:  # already sorted best-first
        if (osa_distance(token, c.surface) <= config.auto_correct_max_distance
                and transform(c.surface, model.ruleset) == base):
            return CorrectionDecision("auto-correct", c.surface, ())
    offers = tuple(
        c.surface for c in candidates
        if osa_distance(token, c.surface) <= config.correction_max_distance)
    if offers:
        return CorrectionDecision("offer", token, offers)
    return CorrectionDecision("accept", token, ())


class Session:
    """One user's live composing state over immutable models."""

    def __init__(self, model: ModelSet, user: Optional[UserModel] = None,
                 config: Optional[EngineConfig] = None,
                 mode: Optional[str] = None):
        self.model = model
        self.user = user if user is not None else UserModel(order=model.ngram.order)
        self.config = config or EngineConfig()
        self.mode = mode or model.mode
        if self.mode not in (MODE_NATIVE, MODE_ROMANIZED):
            raise InputError(f"unknown mode {self.mode!r}")
        if self.mode == MODE_NATIVE and model.layout is None:
            raise InputError("ambiguous-keypad sessions need a key layout")
        self.context_tokens: List[str] = []
        self.composing = ""
        self._norm_cache: Optional[tuple] = None
        self._image_cache: dict = {}

    # --------------------------------------------------------------- context

    def normalized_context(self) -> List[str]:
        key = tuple(self.context_tokens)
        if self._norm_cache is None or self._norm_cache[0] != key:
            self._norm_cache = (key, normalize_context(self.context_tokens,
                                                       self.model))
        return list(self._norm_cache[1])

    # ------------------------------------------------------------ keystrokes

    def press_key(self, key: str) -> List[Candidate]:
        """Append one keystroke to the composing word and rank candidates."""
        if len(key) != 1 or key.isspace():
            raise InputError(f"key must be a single codepoint, got {key!r}")
        if self.mode == MODE_NATIVE:
            if key not in self.model.layout.representatives:
                raise InputError(f"{key!r} is not a representative codepoint")
            self.composing += key
            return self._native_candidates()
        if not ("a" <= key <= "z" or "A" <= key <= "Z"):
            raise InputError(f"romanized input takes Latin letters, got {key!r}")
        self.composing += key.lower()
        return self.compose_candidates(self.composing)

    def backspace(self) -> None:
        """Drop the last composing codepoint, or the last committed word."""
        if self.composing:
            self.composing = self.composing[:-1]
        elif self.context_tokens:
            self.context_tokens.pop()

    def current_candidates(self) -> List[Candidate]:
        if not self.composing:
            return []
        if self.mode == MODE_NATIVE:
            return self._native_candidates()
        return self.compose_candidates(self.composing)

    # ------------------------------------------------------------ candidates

    def _image(self, rank: int) -> str:
        """Transformed key image of the vocabulary word at rank, cached."""
        img = self._image_cache.get(rank)
        if img is None:
            img = transform(self.model.lexicon.word(rank), self.model.ruleset)
            self._image_cache[rank] = img
        return img

    def _continuation_ids(self, ctx: List[str]) -> List[int]:
        return context_continuation_ids(self.model.ngram, self.user, ctx,
                                        self.config.context_fetch_limit)

    def _native_candidates(self) -> List[Candidate]:
        ctx = self.normalized_context()
        cfg = self.config
        lex = self.model.lexicon
        hits = self.model.tries.shadow.prefix_search(self.composing,
                                                     cfg.fetch_limit)
        pool = {hit.index for hit in hits}
        # A rank-ordered trie fetch misses low-frequency words the context
        # strongly predicts; pull observed continuations back in when their
        # key image matches what was typed.
        for wid in self._continuation_ids(ctx):
            if wid not in pool and self._image(wid).startswith(self.composing):
                pool.add(wid)
        out = []
        for rank in pool:
            word = lex.word(rank)
            score = lm_score(self.model.ngram, self.user, ctx, word)
            score -= cfg.lambda_len * (len(word) - len(self.composing))
            out.append(Candidate(word, rank, score, SOURCE_SHADOW, 0))
        out.sort(key=_sort_key)
        return out[:cfg.max_candidates]

    def compose_candidates(self, token: str) -> List[Candidate]:
        """Candidates for a romanized token: raw prefix matches, variant
        matches through the base form, and the user's learned spellings."""
        if not token:
            raise InputError("token must be nonempty")
        ctx = self.normalized_context()
        cfg = self.config
        lex = self.model.lexicon
        ngram = self.model.ngram
        base = transform(token, self.model.ruleset)

        def scored(surface, rank, source, user_key=None):
            s = lm_score(ngram, self.user, ctx, surface, user_key=user_key)
            s -= cfg.lambda_len * (len(surface) - len(token))
            s -= cfg.mu_edit * prefix_osa(token, surface)
            ed = min(osa_distance(token, surface), EDIT_DISTANCE_CAP)
            return Candidate(surface, rank, s, source, ed)

        merged: dict = {}

        def add(c: Candidate):
            prev = merged.get(c.surface)
            if prev is None or c.score > prev.score:
                merged[c.surface] = c

        for hit in self.model.tries.vocab.prefix_search(token, cfg.fetch_limit):
            add(scored(lex.word(hit.index), hit.index, SOURCE_VOCAB))
        for hit in self.model.tries.shadow.prefix_search(base, cfg.fetch_limit):
            add(scored(lex.word(hit.index), hit.index, SOURCE_SHADOW))
        for wid in self._continuation_ids(ctx):
            word = lex.word(wid)
            if word.startswith(token):
                add(scored(word, wid, SOURCE_VOCAB))
            elif self._image(wid).startswith(base):
                add(scored(word, wid, SOURCE_SHADOW))
        for surface, sbase, _count, _last in \
                self.user.surfaces_with_base_prefix(base):
            add(scored(surface, None, SOURCE_USER, user_key=sbase))

        out = sorted(merged.values(), key=_sort_key)
        return out[:cfg.max_candidates]

    # ---------------------------------------------------------------- commit

    def auto_correct(self, token: Optional[str] = None) -> CorrectionDecision:
        tok = token if token is not None else self.composing
        if not tok:
            raise InputError("nothing to correct")
        return auto_correct(tok, self.compose_candidates(tok), self.config,
                            self.model)

    def commit(self, word: str, learn: bool = True) -> "Session":
        """Finalize one word: learn it against the pre-commit context,
        then append it to the context. learn=False skips the user-model
        update (replay and measurement runs want frozen models)."""
        if not word or any(ch.isspace() for ch in word):
            raise InputError(f"commit takes a single token, got {word!r}")
        if learn:
            ctx_before = self.normalized_context()
            twin_rank = None
            if word not in self.model.lexicon:
                idxs = self.model.tries.shadow.lookup(
                    transform(word, self.model.ruleset))
                if idxs:
                    twin_rank = min(idxs)
            learn_commit(self.user, ctx_before, word, self.model.lexicon,
                         rules=self.model.ruleset, twin_rank=twin_rank)
        self.context_tokens.append(word)
        self.composing = ""
        return self

    # --------------------------------------------------------------- predict

    def predict(self, k: int = 3) -> List[Candidate]:
        """Next-word candidates from the normalized committed context only."""
        ctx = self.normalized_context()
        words = predict_next(self.model.ngram, self.user, ctx, k)
        out = []
        for w in words:
            rank = self.model.lexicon.rank(w)
            out.append(Candidate(w, rank,
                                 lm_score(self.model.ngram, self.user, ctx, w),
                                 SOURCE_VOCAB, 0))
        return out
