"""Backoff n-gram scoring plus the per-user adaptive model.

The static model is trained once from the corpus and frozen into the
model file. Scoring walks the usable orders top-down, discounting by
beta for every level below the highest, and keeps the best rung rather
than stopping at the first hit; that way adding observations can only
raise a word's score. The bottom rung is always the lexicon-frequency
unigram, so an untrained model still ranks words sensibly and a fully
unknown word bottoms out at the floor.

The user model is a small mutable overlay: committed words and their
contexts accrue counts keyed variant-agnostically (in-vocabulary words
by rank, out-of-vocabulary ones by a caller-resolved twin rank or their
rewritten base form), and scores blend in at a fixed weight once any
user mass exists.
"""

from __future__ import annotations

import math
import struct
from collections import Counter
from typing import Iterable, Optional

from .errors import ModelFormatError
from .lexicon import Lexicon, iter_lines, tokenize
from .rules import RuleSet, transform

UNK = -1
BETA = 0.4
LAMBDA_USER = 0.3
UNK_FLOOR = 1e-9

UserKey = object  # int rank for in-vocab words, str otherwise


class NGramModel:
    """Immutable count tables for orders 1..order over rank ids."""

    __slots__ = ("lex", "order", "beta", "unk_floor", "_tables", "_totals",
                 "_unk_mass", "_uni_denom")

    def __init__(self, lex: Lexicon, order: int, tables: dict,
                 beta: float = BETA, unk_floor: float = UNK_FLOOR):
        self.lex = lex
        self.order = order
        self.beta = beta
        self.unk_floor = unk_floor
        self._tables = tables
        self._totals = {k: {ctx: sum(cnt.values()) for ctx, cnt in tab.items()}
                        for k, tab in tables.items()}
        self._unk_mass = tables.get(1, {}).get((), {}).get(UNK, 0)
        self._uni_denom = sum(lex.frequencies) + self._unk_mass

    def context_ids(self, context: Iterable[str]) -> list:
        out = []
        for tok in context:
            r = self.lex.rank(tok)
            out.append(UNK if r is None else r)
        return out

    def ngram_count(self, ctx: tuple, word_id: int) -> int:
        tab = self._tables.get(len(ctx) + 1)
        if not tab:
            return 0
        cnt = tab.get(tuple(ctx))
        return cnt[word_id] if cnt and word_id in cnt else 0

    def context_total(self, ctx: tuple) -> int:
        tot = self._totals.get(len(ctx) + 1)
        return tot.get(tuple(ctx), 0) if tot else 0

    def continuations(self, ctx: tuple):
        tab = self._tables.get(len(ctx) + 1)
        if not tab:
            return ()
        cnt = tab.get(tuple(ctx))
        return tuple(cnt.keys()) if cnt else ()

    def unigram_p(self, word_id: int) -> float:
        if self._uni_denom == 0:
            return 0.0
        if word_id == UNK:
            return self._unk_mass / self._uni_denom
        return self.lex.frequencies[word_id] / self._uni_denom

    def __eq__(self, other):
        if not isinstance(other, NGramModel):
            return NotImplemented
        return (self.order == other.order and self._tables == other._tables
                and self.lex == other.lex)

    # ------------------------------------------------------------- storage

    def to_bytes(self) -> bytes:
        parts = [struct.pack("<B", self.order)]
        for k in range(1, self.order + 1):
            tab = self._tables.get(k, {})
            parts.append(struct.pack("<I", len(tab)))
            for ctx in sorted(tab):
                cnt = tab[ctx]
                parts.append(struct.pack(f"<{k - 1}i", *ctx) if k > 1 else b"")
                parts.append(struct.pack("<I", len(cnt)))
                for wid in sorted(cnt):
                    parts.append(struct.pack("<iI", wid, cnt[wid]))
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, blob: bytes, lex: Lexicon,
                   beta: float = BETA, unk_floor: float = UNK_FLOOR) -> "NGramModel":
        try:
            (order,) = struct.unpack_from("<B", blob, 0)
            off = 1
            tables: dict = {}
            for k in range(1, order + 1):
                (n_ctx,) = struct.unpack_from("<I", blob, off)
                off += 4
                tab: dict = {}
                for _ in range(n_ctx):
                    if k > 1:
                        ctx = struct.unpack_from(f"<{k - 1}i", blob, off)
                        off += 4 * (k - 1)
                    else:
                        ctx = ()
                    (n_ent,) = struct.unpack_from("<I", blob, off)
                    off += 4
                    cnt: Counter = Counter()
                    for _ in range(n_ent):
                        wid, c = struct.unpack_from("<iI", blob, off)
                        off += 8
                        cnt[wid] = c
                    tab[ctx] = cnt
                tables[k] = tab
        except struct.error as exc:
            raise ModelFormatError(f"truncated ngram section: {exc}") from None
        if off != len(blob):
            raise ModelFormatError("trailing bytes after ngram section")
        return cls(lex, order, tables, beta, unk_floor)


def train_ngram(corpus, lex: Lexicon, order: int = 3,
                beta: float = BETA, unk_floor: float = UNK_FLOOR) -> NGramModel:
    """Count n-grams of orders 1..order, one sentence per line.

    Tokens outside the lexicon count under the reserved UNK id. N-grams
    never cross line boundaries; no synthetic start/end markers.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    tables: dict = {k: {} for k in range(1, order + 1)}
    for line in iter_lines(corpus):
        if line is None:
            continue
        toks = tokenize(line)
        if not toks:
            continue
        ids = []
        for t in toks:
            r = lex.rank(t)
            ids.append(UNK if r is None else r)
        n = len(ids)
        for i in range(n):
            w = ids[i]
            for k in range(1, order + 1):
                lo = i - k + 1
                if lo < 0:
                    break
                tab = tables[k]
                ctx = tuple(ids[lo:i])
                cnt = tab.get(ctx)
                if cnt is None:
                    cnt = tab[ctx] = Counter()
                cnt[w] += 1
    return NGramModel(lex, order, tables, beta, unk_floor)


class UserModel:
    """Mutable personalization overlay, one per user profile.

    token_counts / ngrams mirror the static model's shape but are keyed
    by UserKey. base_map remembers, per rewritten base form, every
    out-of-vocabulary surface the user has committed with its count and
    last-commit sequence number, so the exact spelling they prefer can
    be offered back while context statistics stay shared across
    spellings.
    """

    def __init__(self, order: int = 3):
        self.order = order
        self.token_counts: dict = {}
        self.recency: dict = {}
        self.ngrams: dict = {}
        self.base_map: dict = {}
        self.commit_seq = 0

    @property
    def total(self) -> int:
        return sum(self.token_counts.values())

    def user_key(self, token: str, lex: Lexicon):
        r = lex.rank(token)
        return r if r is not None else token

    def context_keys(self, context: Iterable[str], lex: Lexicon) -> list:
        return [self.user_key(t, lex) for t in context]

    def preferred_surface(self, base: str) -> Optional[str]:
        """Most-committed surface for a base form, recency breaking ties."""
        surfaces = self.base_map.get(base)
        if not surfaces:
            return None
        return max(surfaces.items(), key=lambda kv: (kv[1][0], kv[1][1]))[0]

    def surfaces_with_base_prefix(self, prefix: str) -> list:
        """(surface, base, count, last_seq) for bases extending prefix."""
        out = []
        for base, surfaces in self.base_map.items():
            if base.startswith(prefix):
                for surface, (count, last) in surfaces.items():
                    out.append((surface, base, count, last))
        return out

    def __eq__(self, other):
        if not isinstance(other, UserModel):
            return NotImplemented
        return (self.order == other.order
                and self.token_counts == other.token_counts
                and self.recency == other.recency
                and self.ngrams == other.ngrams
                and self.base_map == other.base_map
                and self.commit_seq == other.commit_seq)

    # ------------------------------------------------------------- storage

    @staticmethod
    def _pack_key(key) -> bytes:
        if isinstance(key, int):
            return struct.pack("<Bi", 0, key)
        raw = key.encode("utf-8")
        return struct.pack("<BH", 1, len(raw)) + raw

    @staticmethod
    def _unpack_key(blob: bytes, off: int):
        (tag,) = struct.unpack_from("<B", blob, off)
        off += 1
        if tag == 0:
            (key,) = struct.unpack_from("<i", blob, off)
            return key, off + 4
        if tag == 1:
            (n,) = struct.unpack_from("<H", blob, off)
            off += 2
            return blob[off:off + n].decode("utf-8"), off + n
        raise ModelFormatError(f"unknown user key tag {tag}")

    @staticmethod
    def _pack_str(s: str) -> bytes:
        raw = s.encode("utf-8")
        return struct.pack("<H", len(raw)) + raw

    @staticmethod
    def _unpack_str(blob: bytes, off: int):
        (n,) = struct.unpack_from("<H", blob, off)
        off += 2
        return blob[off:off + n].decode("utf-8"), off + n

    def to_bytes(self) -> bytes:
        parts = [struct.pack("<BI", self.order, self.commit_seq)]
        parts.append(struct.pack("<I", len(self.token_counts)))
        for key in sorted(self.token_counts, key=lambda k: (isinstance(k, str), k)):
            parts.append(self._pack_key(key))
            parts.append(struct.pack("<II", self.token_counts[key],
                                     self.recency.get(key, 0)))
        parts.append(struct.pack("<I", len(self.ngrams)))
        for ctx in sorted(self.ngrams,
                          key=lambda c: (len(c), [(isinstance(k, str), k) for k in c])):
            cnt = self.ngrams[ctx]
            parts.append(struct.pack("<B", len(ctx)))
            for key in ctx:
                parts.append(self._pack_key(key))
            parts.append(struct.pack("<I", len(cnt)))
            for key in sorted(cnt, key=lambda k: (isinstance(k, str), k)):
                parts.append(self._pack_key(key))
                parts.append(struct.pack("<I", cnt[key]))
        parts.append(struct.pack("<I", len(self.base_map)))
        for base in sorted(self.base_map):
            surfaces = self.base_map[base]
            parts.append(self._pack_str(base))
            parts.append(struct.pack("<I", len(surfaces)))
            for surface in sorted(surfaces):
                count, last = surfaces[surface]
                parts.append(self._pack_str(surface))
                parts.append(struct.pack("<II", count, last))
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "UserModel":
        try:
            order, seq = struct.unpack_from("<BI", blob, 0)
            off = 5
            user = cls(order=order)
            user.commit_seq = seq
            (n,) = struct.unpack_from("<I", blob, off)
            off += 4
            for _ in range(n):
                key, off = cls._unpack_key(blob, off)
                count, rec = struct.unpack_from("<II", blob, off)
                off += 8
                user.token_counts[key] = count
                user.recency[key] = rec
            (n,) = struct.unpack_from("<I", blob, off)
            off += 4
            for _ in range(n):
                (clen,) = struct.unpack_from("<B", blob, off)
                off += 1
                ctx = []
                for _ in range(clen):
                    key, off = cls._unpack_key(blob, off)
                    ctx.append(key)
                (ne,) = struct.unpack_from("<I", blob, off)
                off += 4
                cnt: Counter = Counter()
                for _ in range(ne):
                    key, off = cls._unpack_key(blob, off)
                    (c,) = struct.unpack_from("<I", blob, off)
                    off += 4
                    cnt[key] = c
                user.ngrams[tuple(ctx)] = cnt
            (n,) = struct.unpack_from("<I", blob, off)
            off += 4
            for _ in range(n):
                base, off = cls._unpack_str(blob, off)
                (ns,) = struct.unpack_from("<I", blob, off)
                off += 4
                surfaces = {}
                for _ in range(ns):
                    surface, off = cls._unpack_str(blob, off)
                    count, last = struct.unpack_from("<II", blob, off)
                    off += 8
                    surfaces[surface] = (count, last)
                user.base_map[base] = surfaces
        except struct.error as exc:
            raise ModelFormatError(f"truncated user model: {exc}") from None
        if off != len(blob):
            raise ModelFormatError("trailing bytes after user model")
        return user


USER_MAGIC = b"EDUS"
USER_VERSION = 1


def save_user(user: UserModel, path) -> None:
    body = user.to_bytes()
    with open(path, "wb") as fh:
        fh.write(USER_MAGIC + struct.pack("<H", USER_VERSION) + body)


def load_user(path) -> UserModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != USER_MAGIC:
        raise ModelFormatError("bad magic in user model file")
    (version,) = struct.unpack_from("<H", blob, 4)
    if version != USER_VERSION:
        raise ModelFormatError(f"unsupported user model version {version}")
    return UserModel.from_bytes(blob[6:])


def learn_commit(user: UserModel, context: list, word: str, lex: Lexicon,
                 rules: Optional[RuleSet] = None,
                 twin_rank: Optional[int] = None) -> UserModel:
    """Record one committed word against its (already normalized) context.

    In-vocabulary words count under their rank. Out-of-vocabulary words
    land in base_map under their rewritten base form and their counts
    accrue to twin_rank when the caller resolved an in-vocabulary twin,
    otherwise to the base form itself, so later commits of sibling
    spellings pile onto one key.
    """
    user.commit_seq += 1
    seq = user.commit_seq
    r = lex.rank(word)
    if r is not None:
        wkey: object = r
    else:
        base = transform(word, rules) if rules is not None else word
        surfaces = user.base_map.setdefault(base, {})
        count, _ = surfaces.get(word, (0, 0))
        surfaces[word] = (count + 1, seq)
        wkey = twin_rank if twin_rank is not None else base
    user.token_counts[wkey] = user.token_counts.get(wkey, 0) + 1
    user.recency[wkey] = seq
    ukeys = user.context_keys(context, lex)
    for k in range(2, user.order + 1):
        if len(ukeys) >= k - 1:
            ctx = tuple(ukeys[len(ukeys) - (k - 1):])
            cnt = user.ngrams.get(ctx)
            if cnt is None:
                cnt = user.ngrams[ctx] = Counter()
            cnt[wkey] += 1
    return user


def lm_score(model: NGramModel, user: Optional[UserModel], context: list,
             word: str, *, lambda_user: float = LAMBDA_USER,
             user_key=None) -> float:
    """Log-probability of word after context.

    Best discounted rung across orders, not first-match: each usable
    order contributes beta^(levels below top) times its relative
    frequency and the maximum wins, so extra observations never lower a
    score. The user model, when it has any mass, blends in linearly at
    lambda_user. user_key overrides the key used for user-table lookups
    (the engine passes a base form for learned out-of-vocabulary
    candidates whose surface is not itself a stored key).
    """
    ids = model.context_ids(context)
    r = model.lex.rank(word)
    wid = UNK if r is None else r
    n_start = min(model.order, len(ids) + 1)
    p_base = 0.0
    for k in range(n_start, 1, -1):
        ctx = tuple(ids[len(ids) - (k - 1):])
        c = model.ngram_count(ctx, wid)
        if c:
            v = model.beta ** (n_start - k) * (c / model.context_total(ctx))
            if v > p_base:
                p_base = v
    v = model.beta ** (n_start - 1) * model.unigram_p(wid)
    if v > p_base:
        p_base = v
    p = p_base
    if user is not None and user.total > 0:
        wkey = user_key
        if wkey is None:
            wkey = r if r is not None else word
        ukeys = user.context_keys(context, model.lex)
        p_user = 0.0
        for k in range(n_start, 1, -1):
            cnt = user.ngrams.get(tuple(ukeys[len(ukeys) - (k - 1):]))
            if cnt:
                c = cnt.get(wkey, 0)
                if c:
                    v = model.beta ** (n_start - k) * (c / sum(cnt.values()))
                    if v > p_user:
                        p_user = v
        v = model.beta ** (n_start - 1) * (user.token_counts.get(wkey, 0) / user.total)
        if v > p_user:
            p_user = v
        p = (1.0 - lambda_user) * p_base + lambda_user * p_user
    return math.log(max(p, model.unk_floor))


def context_continuation_ids(model: NGramModel, user: Optional[UserModel],
                             context: list, limit: int) -> list:
    """Vocabulary ids observed after this context, strongest order first.

    Within one order, ids come in descending observed count (ties toward
    lower rank), so truncation keeps the contextually likeliest words.
    Retrieval layers use this to reach words whose unigram rank alone
    would not surface them.
    """
    if limit <= 0:
        return []
    ids = model.context_ids(context)
    n_start = min(model.order, len(ids) + 1)
    seen = set()
    out = []

    def take(counts):
        for wid in sorted(counts, key=lambda w: (-counts[w], w)):
            if not isinstance(wid, int) or wid == UNK or wid in seen:
                continue
            seen.add(wid)
            out.append(wid)
            if len(out) >= limit:
                return True
        return False

    for kk in range(n_start, 1, -1):
        ctx = tuple(ids[len(ids) - (kk - 1):])
        tab = model._tables.get(kk)
        cnt = tab.get(ctx) if tab else None
        if cnt and take(cnt):
            return out
    if user is not None and user.total > 0:
        ukeys = user.context_keys(context, model.lex)
        for kk in range(n_start, 1, -1):
            cnt = user.ngrams.get(tuple(ukeys[len(ukeys) - (kk - 1):]))
            if cnt and take(cnt):
                return out
    return out


def predict_next(model: NGramModel, user: Optional[UserModel], context: list,
                 k: int, *, lambda_user: float = LAMBDA_USER) -> list:
    """Top-k vocabulary words by lm_score after context.

    Equal to the brute-force argmax over the whole vocabulary: any word
    that is neither an observed continuation nor user-known scores on
    its unigram rung alone, so the top k ranks cover every such word
    that could possibly place. Ties break toward lower rank.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    ids = model.context_ids(context)
    n_start = min(model.order, len(ids) + 1)
    cands = set()
    for kk in range(2, n_start + 1):
        ctx = tuple(ids[len(ids) - (kk - 1):])
        cands.update(model.continuations(ctx))
    if user is not None and user.total > 0:
        ukeys = user.context_keys(context, model.lex)
        for kk in range(2, n_start + 1):
            cnt = user.ngrams.get(tuple(ukeys[len(ukeys) - (kk - 1):]))
            if cnt:
                cands.update(key for key in cnt if isinstance(key, int))
        cands.update(key for key in user.token_counts if isinstance(key, int))
    cands.discard(UNK)
    for rank in range(min(k, len(model.lex))):
        cands.add(rank)
    scored = sorted(
        (-lm_score(model, user, context, model.lex.word(rank),
                   lambda_user=lambda_user), rank)
        for rank in cands)
    return [model.lex.word(rank) for _, rank in scored[:k]]
