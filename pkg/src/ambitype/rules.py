"""Sibling-key layouts and spelling-variant rewrite rules.

Two rule families share one rewrite machine:

* native-sibling rules come from a key layout: every member codepoint of an
  on-screen key rewrites to the key's representative, so any word typed on
  the merged keyboard collapses to the representative-sequence the key
  presses produce.
* roman-variant rules come from a table of interchangeable spelling
  fragments (aa/a, sh/s, word-final ain/ai, ...). Both fragments of a pair
  rewrite to the uppercase canonical fragment, so variant spellings of a
  word collapse to one representation.

``transform`` applies a rule set to a single token with one deterministic
left-to-right scan: at each position the longest matching fragment wins,
anchored fragments beat unanchored ones of the same length, consumed spans
are never rescanned, and unmatched codepoints pass through unchanged.
Replacement alphabets are validated to be disjoint from pattern alphabets,
which makes the scan idempotent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Optional

from .errors import ParseError, ValidationError

ANCHOR_START = "start"
ANCHOR_END = "end"

KIND_ROMAN = "roman-variant"
KIND_NATIVE = "native-sibling"

_DATA_DIR = Path(__file__).resolve().parent / "data"

BUILTIN_RULESETS = {
    "hinglish": "hinglish.rules",
    "benglish": "benglish.rules",
    "marathinglish": "marathinglish.rules",
    "tenglish": "tenglish.rules",
    "thai-roman": "thai_roman.rules",
}

BUILTIN_LAYOUTS = {
    "hi": "layout_hi.json",
    "bn": "layout_bn.json",
    "th": "layout_th.json",
}


@dataclass(frozen=True)
class EquivalenceRule:
    """A pair of interchangeable fragments; ``anchor`` restricts both to a
    word edge (``"start"``/``"end"``) or neither (None)."""

    p: str
    q: str
    anchor: Optional[str] = None


@dataclass(frozen=True)
class RewriteRule:
    pattern: str
    replacement: str
    anchor: Optional[str] = None


class RuleSet:
    """Compiled, validated set of rewrite rules for one language."""

    def __init__(self, language, kind, equivalences, rewrites):
        self.language = language
        self.kind = kind
        self.equivalences = tuple(equivalences)
        self.rewrites = tuple(rewrites)
        self._validate()
        self.max_pattern_len = max((len(r.pattern) for r in self.rewrites), default=0)
        # scan index: first codepoint -> rules ordered longest first, anchored
        # before unanchored at equal length, then by pattern for determinism
        index: dict = {}
        for r in self.rewrites:
            index.setdefault(r.pattern[0], []).append(r)
        for bucket in index.values():
            bucket.sort(key=lambda r: (-len(r.pattern), r.anchor is None, r.pattern))
        self._index = {ch: tuple(bucket) for ch, bucket in index.items()}

    def _validate(self):
        seen = {}
        for r in self.rewrites:
            if not r.pattern or not r.replacement:
                raise ValidationError("empty pattern or replacement")
            key = (r.pattern, r.anchor)
            prev = seen.get(key)
            if prev is not None and prev != r.replacement:
                raise ValidationError(
                    f"pattern {r.pattern!r} (anchor={r.anchor}) maps to both "
                    f"{prev!r} and {r.replacement!r}"
                )
            seen[key] = r.replacement
        # replacement alphabet must not recombine with patterns on a second
        # scan; a replacement codepoint may appear in patterns only as the
        # pattern of its own identity rule
        pattern_chars: dict = {}
        for r in self.rewrites:
            for ch in r.pattern:
                pattern_chars.setdefault(ch, set()).add(r.pattern)
        for r in self.rewrites:
            for ch in set(r.replacement):
                pats = pattern_chars.get(ch)
                if pats is None:
                    continue
                if pats == {ch} and seen.get((ch, None)) == ch:
                    continue
                raise ValidationError(
                    f"replacement codepoint {ch!r} also occurs in patterns "
                    f"{sorted(pats)!r}; rewrites would not be idempotent"
                )

    def rules_at(self, first_char):
        return self._index.get(first_char, ())

    def __repr__(self):
        return f"RuleSet({self.language!r}, {self.kind!r}, {len(self.rewrites)} rules)"


def _dedupe_rewrites(rewrites):
    out, seen = [], set()
    for r in rewrites:
        key = (r.pattern, r.anchor, r.replacement)
        if key not in seen:
            seen.add(key)
            out.append(r)
    return out


def ruleset_from_pairs(pairs: Iterable[EquivalenceRule], language: str) -> RuleSet:
    """Build a roman-variant rule set: both fragments of every pair rewrite
    to the uppercase canonical fragment."""
    pairs = list(pairs)
    rewrites = []
    for eq in pairs:
        target = eq.q.upper()
        rewrites.append(RewriteRule(eq.p, target, eq.anchor))
        rewrites.append(RewriteRule(eq.q, target, eq.anchor))
    return RuleSet(language, KIND_ROMAN, pairs, _dedupe_rewrites(rewrites))


def _parse_fragment(raw, lineno):
    anchor = None
    frag = raw
    if frag.startswith("<"):
        anchor = ANCHOR_START
        frag = frag[1:]
    if frag.endswith(">"):
        if anchor is not None:
            raise ParseError(f"line {lineno}: fragment {raw!r} has two anchors")
        anchor = ANCHOR_END
        frag = frag[:-1]
    if not frag:
        raise ParseError(f"line {lineno}: empty fragment {raw!r}")
    if "<" in frag or ">" in frag:
        raise ParseError(f"line {lineno}: stray anchor marker in {raw!r}")
    return frag, anchor


def parse_ruleset(text: str, language: str = "und") -> RuleSet:
    """Parse a roman-variant rule table: 'alternate<TAB>canonical' per line,
    '#' starts a comment, '<'/'>' mark word-start/word-end anchors."""
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise ParseError(f"line {lineno}: expected two tab-separated fields")
        p, p_anchor = _parse_fragment(fields[0].strip(), lineno)
        q, q_anchor = _parse_fragment(fields[1].strip(), lineno)
        if p_anchor != q_anchor:
            raise ParseError(
                f"line {lineno}: anchors disagree between {fields[0]!r} and {fields[1]!r}"
            )
        for frag in (p, q):
            for ch in frag:
                if not ch.islower():
                    raise ValidationError(
                        f"line {lineno}: fragment {frag!r} must be lowercase"
                    )
        if p == q:
            raise ValidationError(f"line {lineno}: fragments are identical: {p!r}")
        pairs.append(EquivalenceRule(p, q, p_anchor))
    return ruleset_from_pairs(pairs, language)


def ruleset_to_tsv(ruleset: RuleSet) -> str:
    """Equivalence pairs back in the table format parse_ruleset reads."""
    lines = []
    for r in ruleset.equivalences:
        if r.anchor == ANCHOR_START:
            lines.append(f"<{r.p}\t<{r.q}")
        elif r.anchor == ANCHOR_END:
            lines.append(f"{r.p}>\t{r.q}>")
        else:
            lines.append(f"{r.p}\t{r.q}")
    return "\n".join(lines) + "\n"


def load_ruleset(path, language: Optional[str] = None) -> RuleSet:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_ruleset(text, language or path.stem)


def load_builtin_ruleset(name: str) -> RuleSet:
    try:
        fname = BUILTIN_RULESETS[name]
    except KeyError:
        raise KeyError(f"no builtin ruleset {name!r}; have {sorted(BUILTIN_RULESETS)}")
    return load_ruleset(_DATA_DIR / fname, language=name)


# ---------------------------------------------------------------------------
# key layouts


@dataclass(frozen=True)
class Key:
    members: tuple
    representative: str
    view: int = 0
    role: str = "consonants"


class KeyLayout:
    """An ambiguous keyboard layout: keys partition the typeable codepoints
    and each key exposes one representative (its least codepoint)."""

    def __init__(self, language, keys, raw=None):
        self.language = language
        self.keys = tuple(keys)
        self.raw = raw  # original JSON dict, echoed by the layout API
        rep_of, view_of = {}, {}
        for key in self.keys:
            for m in key.members:
                if m in rep_of:
                    raise ValidationError(f"codepoint {m!r} appears on two keys")
                rep_of[m] = key.representative
                view_of[m] = key.view
        self.representative_of = rep_of
        self.view_of = view_of
        self.representatives = frozenset(k.representative for k in self.keys)
        self.typeable = frozenset(rep_of)
        self.n_views = max((k.view for k in self.keys), default=0) + 1

    def key_for(self, ch):
        for key in self.keys:
            if ch in key.members:
                return key
        return None


def _key_from_dict(obj, idx):
    members = obj.get("members")
    if not members or not isinstance(members, list):
        raise ValidationError(f"key {idx}: members must be a non-empty list")
    for m in members:
        if not isinstance(m, str) or len(m) != 1:
            raise ValidationError(f"key {idx}: member {m!r} is not a single codepoint")
    rep = obj.get("representative")
    expected = min(members)
    if rep is None:
        rep = expected
    elif rep != expected:
        raise ValidationError(
            f"key {idx}: representative {rep!r} is not the least codepoint "
            f"{expected!r} of its members"
        )
    view = obj.get("view", 0)
    role = obj.get("role", "consonants")
    return Key(tuple(members), rep, view, role)


def parse_layout(obj: dict) -> KeyLayout:
    if not isinstance(obj, dict) or "keys" not in obj:
        raise ValidationError("layout must be an object with a 'keys' array")
    language = obj.get("language", "und")
    keys = [_key_from_dict(k, i) for i, k in enumerate(obj["keys"])]
    return KeyLayout(language, keys, raw=obj)


def load_layout(path) -> KeyLayout:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: {e}") from e
    return parse_layout(obj)


def load_builtin_layout(language: str) -> KeyLayout:
    try:
        fname = BUILTIN_LAYOUTS[language]
    except KeyError:
        raise KeyError(f"no builtin layout {language!r}; have {sorted(BUILTIN_LAYOUTS)}")
    return load_layout(_DATA_DIR / fname)


def derive_native_ruleset(layout: KeyLayout) -> RuleSet:
    """Single-codepoint rules mapping every key member to the key's
    representative. Representatives need no rule: with no pattern of their
    own they pass through the scan unchanged."""
    pairs, rewrites = [], []
    for key in layout.keys:
        for m in key.members:
            if m == key.representative:
                continue
            pairs.append(EquivalenceRule(m, key.representative))
            rewrites.append(RewriteRule(m, key.representative))
    return RuleSet(layout.language, KIND_NATIVE, pairs, rewrites)


# ---------------------------------------------------------------------------
# the rewrite scan


def transform(word: str, ruleset: RuleSet) -> str:
    """Rewrite one token to its shared representation."""
    if not word:
        return word
    for ch in word:
        if ch.isspace():
            raise ValueError(f"transform takes a single token, got {word!r}")
    index = ruleset._index
    n = len(word)
    out = []
    i = 0
    while i < n:
        ch = word[i]
        bucket = index.get(ch)
        matched = None
        if bucket is not None:
            for r in bucket:
                plen = len(r.pattern)
                if r.anchor == ANCHOR_START and i != 0:
                    continue
                if r.anchor == ANCHOR_END and i + plen != n:
                    continue
                if word.startswith(r.pattern, i):
                    matched = r
                    break
        if matched is None:
            out.append(ch)
            i += 1
        else:
            out.append(matched.replacement)
            i += len(matched.pattern)
    return "".join(out)


# ---------------------------------------------------------------------------
# variant substitution sites
#
# Swapping one fragment of a pair for the other preserves the transform
# image only when no other fragment occurrence straddles the edges of the
# swapped span (the scan would otherwise consume across the edit, e.g. the
# second 'a' of "maal" participates in the "aa" match). The check below is
# purely structural: it looks at fragment occurrences, never at transform
# output, so tests built on it stay independent of the scanner.


class Site(NamedTuple):
    start: int
    source: str
    target: str
    rule: EquivalenceRule
    result: str


def _anchor_ok(anchor, pos, plen, n):
    if anchor == ANCHOR_START:
        return pos == 0
    if anchor == ANCHOR_END:
        return pos + plen == n
    return True


def _occurrence_straddles(word, ruleset, boundary):
    n = len(word)
    lo = max(0, boundary - ruleset.max_pattern_len + 1)
    for m in range(lo, boundary):
        for r in ruleset.rules_at(word[m]):
            plen = len(r.pattern)
            if m + plen <= boundary:
                continue
            if _anchor_ok(r.anchor, m, plen, n) and word.startswith(r.pattern, m):
                return True
    return False


def variant_sites(word: str, ruleset: RuleSet, directions=("q_to_p", "p_to_q")):
    """All single-fragment swaps of `word` guaranteed to preserve its
    transform image, in deterministic order."""
    n = len(word)
    sites = []
    for rule in ruleset.equivalences:
        swaps = []
        if "q_to_p" in directions:
            swaps.append((rule.q, rule.p))
        if "p_to_q" in directions:
            swaps.append((rule.p, rule.q))
        for source, target in swaps:
            slen = len(source)
            if rule.anchor == ANCHOR_START:
                positions = [0] if word.startswith(source) else []
            elif rule.anchor == ANCHOR_END:
                positions = [n - slen] if n >= slen and word.endswith(source) else []
            else:
                positions = [i for i in range(n - slen + 1) if word.startswith(source, i)]
            for i in positions:
                j = i + slen
                result = word[:i] + target + word[j:]
                if _occurrence_straddles(word, ruleset, i):
                    continue
                if _occurrence_straddles(word, ruleset, j):
                    continue
                if _occurrence_straddles(result, ruleset, i):
                    continue
                if _occurrence_straddles(result, ruleset, i + len(target)):
                    continue
                sites.append(Site(i, source, target, rule, result))
    return sites
