"""Compact immutable prefix tries over rank-indexed vocabularies.

Nodes live in flat parallel arrays instead of linked objects: one
codepoint label per node, children stored contiguously and sorted by
label so lookup is a binary search per character. Each node carries the
minimum rank found anywhere in its subtree, which lets prefix search
pop results in global rank order with a heap instead of collecting and
sorting.

Two tries are built per language model: one over the vocabulary words
themselves and one over their rewritten (ambiguous or canonical-variant)
forms, sharing rank indices so a hit in either resolves to the same
word list.
"""

from __future__ import annotations

import heapq
import struct
from array import array
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Optional, Tuple

from .errors import ModelFormatError
from .rules import RuleSet, transform

_NO_RANK = 0xFFFFFFFF  # subtree min-rank sentinel for an empty trie
_ROOT_LABEL = "\x00"


class PrefixHit(NamedTuple):
    index: int
    exact: bool


class FuzzyHit(NamedTuple):
    index: int
    distance: int
    key: str


class CompactTrie:
    """Static trie mapping string keys to small sets of rank indices."""

    __slots__ = (
        "_labels", "_first_child", "_child_count",
        "_term_off", "_term_len", "_min_rank", "_ranks", "_key_count",
    )

    def __init__(self, labels, first_child, child_count, term_off, term_len,
                 min_rank, ranks, key_count):
        self._labels = labels
        self._first_child = first_child
        self._child_count = child_count
        self._term_off = term_off
        self._term_len = term_len
        self._min_rank = min_rank
        self._ranks = ranks
        self._key_count = key_count

    # ---------------------------------------------------------------- build

    @classmethod
    def from_items(cls, items: Iterable[Tuple[str, Iterable[int]]]) -> "CompactTrie":
        """Build from (key, indices) pairs. Duplicate keys merge their sets."""
        merged: dict = {}
        for key, idxs in items:
            if not key:
                raise ValueError("empty keys are not storable")
            merged.setdefault(key, set()).update(idxs)
        entries = sorted(merged.items())
        for key, idxs in entries:
            for i in idxs:
                if not (0 <= i < _NO_RANK):
                    raise ValueError(f"rank index {i} out of range")

        labels = [_ROOT_LABEL]
        first_child = [0]
        child_count = [0]
        term_off = [0]
        term_len = [0]
        ranks: list = []
        # (lo, hi, depth) spans over the sorted entries, one per node, in
        # BFS order so each node's children land contiguously
        spans = [(0, len(entries), 0)]
        i = 0
        while i < len(spans):
            lo, hi, depth = spans[i]
            pos = lo
            if pos < hi and len(entries[pos][0]) == depth:
                own = sorted(entries[pos][1])
                term_off[i] = len(ranks)
                term_len[i] = len(own)
                ranks.extend(own)
                pos += 1
            if pos < hi:
                first_child[i] = len(spans)
                n_children = 0
                g = pos
                while g < hi:
                    ch = entries[g][0][depth]
                    h = g + 1
                    while h < hi and entries[h][0][depth] == ch:
                        h += 1
                    labels.append(ch)
                    first_child.append(0)
                    child_count.append(0)
                    term_off.append(0)
                    term_len.append(0)
                    spans.append((g, h, depth + 1))
                    n_children += 1
                    g = h
                child_count[i] = n_children
            i += 1

        # children always come after their parent in BFS order, so one
        # reverse pass folds subtree minima upward
        min_rank = [_NO_RANK] * len(spans)
        for node in range(len(spans) - 1, -1, -1):
            m = _NO_RANK
            if term_len[node]:
                m = ranks[term_off[node]]
            fc, cc = first_child[node], child_count[node]
            for c in range(fc, fc + cc):
                if min_rank[c] < m:
                    m = min_rank[c]
            min_rank[node] = m

        return cls(
            "".join(labels),
            array("I", first_child), array("I", child_count),
            array("I", term_off), array("I", term_len),
            array("I", min_rank), array("I", ranks),
            len(entries),
        )

    # --------------------------------------------------------------- lookup

    def __len__(self) -> int:
        return self._key_count

    @property
    def node_count(self) -> int:
        return len(self._first_child)

    def _find_child(self, node: int, ch: str) -> int:
        lo = self._first_child[node]
        hi = lo + self._child_count[node]
        labels = self._labels
        while lo < hi:
            mid = (lo + hi) >> 1
            c = labels[mid]
            if c < ch:
                lo = mid + 1
            elif c > ch:
                hi = mid
            else:
                return mid
        return -1

    def _walk(self, key: str) -> int:
        node = 0
        for ch in key:
            node = self._find_child(node, ch)
            if node < 0:
                return -1
        return node

    def _terminal_ranks(self, node: int) -> Tuple[int, ...]:
        off, n = self._term_off[node], self._term_len[node]
        return tuple(self._ranks[off:off + n])

    def lookup(self, key: str) -> Tuple[int, ...]:
        """Rank indices stored under exactly this key, ascending. () if absent."""
        node = self._walk(key)
        if node < 0:
            return ()
        return self._terminal_ranks(node)

    def __contains__(self, key: str) -> bool:
        node = self._walk(key)
        return node >= 0 and self._term_len[node] > 0

    def prefix_search(self, prefix: str, limit: int) -> list:
        """All indices under keys extending `prefix`, in ascending rank order.

        Best-first over subtree minima, so truncation at `limit` still
        returns the globally lowest-ranked hits. exact marks hits whose
        stored key equals the prefix itself.
        """
        if not prefix:
            raise ValueError("prefix must be nonempty")
        if limit < 1:
            raise ValueError("limit must be >= 1")
        start = self._walk(prefix)
        if start < 0:
            return []
        out: list = []
        tiebreak = 0
        # heap holds settled hits (kind 0) and unexpanded subtrees (kind 1);
        # a subtree is keyed by its min rank, so nothing pops before every
        # lower-ranked hit has surfaced
        heap = [(self._min_rank[start], 0, 1, start)]
        while heap and len(out) < limit:
            rank, _, kind, payload = heapq.heappop(heap)
            if kind == 0:
                out.append(PrefixHit(rank, payload))
                continue
            node = payload
            if self._term_len[node]:
                exact = node == start
                off, n = self._term_off[node], self._term_len[node]
                for r in self._ranks[off:off + n]:
                    tiebreak += 1
                    heapq.heappush(heap, (r, tiebreak, 0, exact))
            fc, cc = self._first_child[node], self._child_count[node]
            for c in range(fc, fc + cc):
                tiebreak += 1
                heapq.heappush(heap, (self._min_rank[c], tiebreak, 1, c))
        return out

    def fuzzy_search(self, query: str, max_edits: int, limit: Optional[int] = None) -> list:
        """Keys within `max_edits` single-character edits of `query`.

        Edits are insert, delete, substitute and adjacent transposition.
        Matches come back sorted by (distance, rank index).
        """
        if max_edits < 0:
            raise ValueError("max_edits must be >= 0")
        n = len(query)
        hits: list = []
        rows = [list(range(n + 1))]
        chars = [""]
        # DFS; rows/chars are truncated to the frame depth on entry so they
        # always mirror the path down to the current node's parent
        fc, cc = self._first_child[0], self._child_count[0]
        stack = [(c, 1, self._labels[c]) for c in range(fc + cc - 1, fc - 1, -1)]
        while stack:
            node, depth, ch = stack.pop()
            del rows[depth:]
            del chars[depth:]
            prev = rows[depth - 1]
            cur = [depth] + [0] * n
            for j in range(1, n + 1):
                cost = 0 if ch == query[j - 1] else 1
                best = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
                if (depth >= 2 and j >= 2 and ch == query[j - 2]
                        and chars[depth - 1] == query[j - 1]):
                    t = rows[depth - 2][j - 2] + 1
                    if t < best:
                        best = t
                cur[j] = best
            rows.append(cur)
            chars.append(ch)
            if self._term_len[node] and cur[n] <= max_edits:
                off, ln = self._term_off[node], self._term_len[node]
                key = "".join(chars[1:depth + 1])
                for r in self._ranks[off:off + ln]:
                    hits.append(FuzzyHit(r, cur[n], key))
            if min(cur) <= max_edits:
                fc, cc = self._first_child[node], self._child_count[node]
                for c in range(fc + cc - 1, fc - 1, -1):
                    stack.append((c, depth + 1, self._labels[c]))
        hits.sort(key=lambda h: (h.distance, h.index))
        if limit is not None:
            hits = hits[:limit]
        return hits

    def items(self) -> Iterator[Tuple[str, Tuple[int, ...]]]:
        """(key, indices) pairs in lexicographic key order."""
        fc, cc = self._first_child[0], self._child_count[0]
        stack = [(c, self._labels[c]) for c in range(fc + cc - 1, fc - 1, -1)]
        while stack:
            node, key = stack.pop()
            if self._term_len[node]:
                yield key, self._terminal_ranks(node)
            fc, cc = self._first_child[node], self._child_count[node]
            for c in range(fc + cc - 1, fc - 1, -1):
                stack.append((c, key + self._labels[c]))

    # -------------------------------------------------------------- storage

    def to_bytes(self) -> bytes:
        label_bytes = self._labels.encode("utf-8")
        parts = [struct.pack("<III", len(self._first_child), self._key_count,
                             len(label_bytes)), label_bytes]
        for arr in (self._first_child, self._child_count, self._term_off,
                    self._term_len, self._min_rank):
            parts.append(struct.pack(f"<{len(arr)}I", *arr))
        parts.append(struct.pack("<I", len(self._ranks)))
        parts.append(struct.pack(f"<{len(self._ranks)}I", *self._ranks))
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "CompactTrie":
        try:
            n_nodes, key_count, label_len = struct.unpack_from("<III", blob, 0)
            off = 12
            labels = blob[off:off + label_len].decode("utf-8")
            off += label_len
            if len(labels) != n_nodes:
                raise ModelFormatError("trie label count does not match node count")
            arrs = []
            for _ in range(5):
                arrs.append(array("I", struct.unpack_from(f"<{n_nodes}I", blob, off)))
                off += 4 * n_nodes
            (n_ranks,) = struct.unpack_from("<I", blob, off)
            off += 4
            ranks = array("I", struct.unpack_from(f"<{n_ranks}I", blob, off))
            off += 4 * n_ranks
        except struct.error as exc:
            raise ModelFormatError(f"truncated trie section: {exc}") from None
        if off != len(blob):
            raise ModelFormatError("trailing bytes after trie section")
        return cls(labels, arrs[0], arrs[1], arrs[2], arrs[3], arrs[4],
                   ranks, key_count)


@dataclass(frozen=True)
class ParallelTrieSet:
    """Vocabulary trie plus its rewritten shadow, sharing rank indices."""
    vocab: CompactTrie
    shadow: CompactTrie
    ruleset_id: str


def build_parallel_tries(lex, rules: Optional[RuleSet]) -> ParallelTrieSet:
    """Index a lexicon under both its surface forms and their rewrites.

    rules=None means the identity rewrite: the shadow trie is then just
    a second copy of the vocabulary keyed by the words themselves (the
    unambiguous-keyboard configuration).
    """
    vocab = CompactTrie.from_items((w, (i,)) for i, w in enumerate(lex.words))
    if rules is None:
        shadow = CompactTrie.from_items((w, (i,)) for i, w in enumerate(lex.words))
        rid = "identity"
    else:
        grouped: dict = {}
        for i, w in enumerate(lex.words):
            grouped.setdefault(transform(w, rules), []).append(i)
        shadow = CompactTrie.from_items(grouped.items())
        rid = f"{rules.language}/{rules.kind}"
    return ParallelTrieSet(vocab, shadow, rid)
