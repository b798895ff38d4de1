"""Single-file binary container for a built language model.

Layout: magic "EDAT", format version (u16 LE), length-prefixed language
id, then named sections, each framed as

    u8 name-length | name (ascii) | u32 payload-length | payload

so readers skip names they do not know. Required sections are LEXICON,
VOCABTRIE, SHADOWTRIE and NGRAM; exactly one of RULESET (canonical
variant rules, stored as the same tab-separated table the rule parser
reads) or LAYOUT (key layout JSON, sibling rules rederived on load)
describes how shadow keys were produced. A model with a LAYOUT drives
ambiguous-keypad sessions; one with a RULESET drives romanized
sessions.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Optional, Union

from .errors import ModelFormatError
from .lexicon import DEFAULT_CAPACITY, Lexicon, build_lexicon, iter_lines
from .lm import NGramModel, train_ngram
from .rules import (KIND_NATIVE, KeyLayout, RuleSet, derive_native_ruleset,
                    parse_layout, parse_ruleset, ruleset_to_tsv)
from .trie import CompactTrie, ParallelTrieSet, build_parallel_tries

MAGIC = b"EDAT"
VERSION = 1

MODE_NATIVE = "native-ambiguous"
MODE_ROMANIZED = "romanized"


@dataclass(frozen=True)
class SizeReport:
    vocab_trie_bytes: int
    shadow_trie_bytes: int

    @property
    def ratio(self) -> float:
        return self.shadow_trie_bytes / self.vocab_trie_bytes


@dataclass
class ModelSet:
    """Everything the engine needs for one language/mode pair."""
    language: str
    lexicon: Lexicon
    tries: ParallelTrieSet
    ngram: NGramModel
    ruleset: RuleSet
    layout: Optional[KeyLayout] = None

    @property
    def mode(self) -> str:
        return MODE_NATIVE if self.ruleset.kind == KIND_NATIVE else MODE_ROMANIZED

    def size_report(self) -> SizeReport:
        return SizeReport(len(self.tries.vocab.to_bytes()),
                          len(self.tries.shadow.to_bytes()))


def build_model(corpus, language: str, *, ruleset: Optional[RuleSet] = None,
                layout: Optional[KeyLayout] = None,
                k: int = DEFAULT_CAPACITY, order: int = 3) -> ModelSet:
    """Full preload pipeline: lexicon, parallel tries, n-gram counts.

    Give a layout for an ambiguous-keypad model (sibling rules are
    derived from it) or a ruleset for a romanized one. The corpus is
    read twice, so generic iterables are materialized up front.
    """
    if ruleset is None:
        if layout is None:
            raise ValueError("need a ruleset or a layout")
        ruleset = derive_native_ruleset(layout)
    if not isinstance(corpus, (str, bytes)) and not hasattr(corpus, "__fspath__"):
        corpus = list(iter_lines(corpus))
    lex = build_lexicon(corpus, k=k)
    tries = build_parallel_tries(lex, ruleset)
    ngram = train_ngram(corpus, lex, order=order)
    return ModelSet(language, lex, tries, ngram, ruleset, layout)


def _lexicon_to_bytes(lex: Lexicon) -> bytes:
    parts = [struct.pack("<I", len(lex))]
    for word, freq in zip(lex.words, lex.frequencies):
        raw = word.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)) + raw + struct.pack("<I", freq))
    return b"".join(parts)


def _lexicon_from_bytes(blob: bytes) -> Lexicon:
    try:
        (n,) = struct.unpack_from("<I", blob, 0)
        off = 4
        words, freqs = [], []
        for _ in range(n):
            (wlen,) = struct.unpack_from("<H", blob, off)
            off += 2
            words.append(blob[off:off + wlen].decode("utf-8"))
            off += wlen
            (f,) = struct.unpack_from("<I", blob, off)
            off += 4
            freqs.append(f)
    except struct.error as exc:
        raise ModelFormatError(f"truncated LEXICON section: {exc}") from None
    if off != len(blob):
        raise ModelFormatError("trailing bytes in LEXICON section")
    return Lexicon(words, freqs)


def _frame(name: str, payload: bytes) -> bytes:
    raw = name.encode("ascii")
    return struct.pack("<B", len(raw)) + raw + struct.pack("<I", len(payload)) + payload


def serialize_model(ms: ModelSet) -> bytes:
    lang = ms.language.encode("utf-8")
    parts = [MAGIC, struct.pack("<HB", VERSION, len(lang)), lang]
    parts.append(_frame("LEXICON", _lexicon_to_bytes(ms.lexicon)))
    parts.append(_frame("VOCABTRIE", ms.tries.vocab.to_bytes()))
    parts.append(_frame("SHADOWTRIE", ms.tries.shadow.to_bytes()))
    parts.append(_frame("NGRAM", ms.ngram.to_bytes()))
    if ms.ruleset.kind == KIND_NATIVE:
        if ms.layout is None:
            raise ValueError("sibling-rule models must carry their layout")
        payload = json.dumps(ms.layout.raw, ensure_ascii=False,
                             separators=(",", ":")).encode("utf-8")
        parts.append(_frame("LAYOUT", payload))
    else:
        tsv = ruleset_to_tsv(ms.ruleset).encode("utf-8")
        parts.append(_frame("RULESET", tsv))
        if ms.layout is not None:
            payload = json.dumps(ms.layout.raw, ensure_ascii=False,
                                 separators=(",", ":")).encode("utf-8")
            parts.append(_frame("LAYOUT", payload))
    return b"".join(parts)


def save_model(ms: ModelSet, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_model(ms))


def _read_sections(blob: bytes, off: int) -> dict:
    sections: dict = {}
    while off < len(blob):
        try:
            (nlen,) = struct.unpack_from("<B", blob, off)
            off += 1
            name = blob[off:off + nlen].decode("ascii")
            off += nlen
            (plen,) = struct.unpack_from("<I", blob, off)
            off += 4
        except (struct.error, UnicodeDecodeError):
            raise ModelFormatError("truncated section header") from None
        if off + plen > len(blob):
            raise ModelFormatError(f"truncated {name or '?'} section payload")
        sections[name] = blob[off:off + plen]
        off += plen
    return sections


def load_model(source: Union[bytes, str, "os.PathLike"]) -> ModelSet:
    """Parse a serialized model. Accepts raw bytes or a file path."""
    if isinstance(source, bytes):
        blob = source
    else:
        with open(source, "rb") as fh:
            blob = fh.read()
    if blob[:4] != MAGIC:
        raise ModelFormatError("bad magic")
    try:
        version, llen = struct.unpack_from("<HB", blob, 4)
    except struct.error:
        raise ModelFormatError("truncated header") from None
    if version != VERSION:
        raise ModelFormatError(f"unsupported format version {version}")
    language = blob[7:7 + llen].decode("utf-8")
    sections = _read_sections(blob, 7 + llen)

    for required in ("LEXICON", "VOCABTRIE", "SHADOWTRIE", "NGRAM"):
        if required not in sections:
            raise ModelFormatError(f"missing {required} section")
    lex = _lexicon_from_bytes(sections["LEXICON"])
    try:
        vocab = CompactTrie.from_bytes(sections["VOCABTRIE"])
    except ModelFormatError as exc:
        raise ModelFormatError(f"VOCABTRIE section: {exc}") from None
    try:
        shadow = CompactTrie.from_bytes(sections["SHADOWTRIE"])
    except ModelFormatError as exc:
        raise ModelFormatError(f"SHADOWTRIE section: {exc}") from None
    try:
        ngram = NGramModel.from_bytes(sections["NGRAM"], lex)
    except ModelFormatError as exc:
        raise ModelFormatError(f"NGRAM section: {exc}") from None

    layout = None
    if "LAYOUT" in sections:
        try:
            layout = parse_layout(json.loads(sections["LAYOUT"].decode("utf-8")))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ModelFormatError(f"LAYOUT section: {exc}") from None
    if "RULESET" in sections:
        try:
            ruleset = parse_ruleset(sections["RULESET"].decode("utf-8"), language)
        except UnicodeDecodeError as exc:
            raise ModelFormatError(f"RULESET section: {exc}") from None
    elif layout is not None:
        ruleset = derive_native_ruleset(layout)
    else:
        raise ModelFormatError("missing RULESET or LAYOUT section")

    rid = f"{ruleset.language}/{ruleset.kind}"
    tries = ParallelTrieSet(vocab, shadow, rid)
    return ModelSet(language, lex, tries, ngram, ruleset, layout)
