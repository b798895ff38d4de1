"""Measurement harness: typing simulation and its summary metrics.

The simulator replays a test sentence the way a disciplined user would
type it. For every word it first checks the next-word predictions; a
predicted word is committed with a single selection tap. Otherwise keys
go in one at a time and the word is selected as soon as it shows up in
the candidate strip; if it never does, the trailing separator ends it.

Keystroke accounting (the classic text-entry convention):

* a selection tap costs one keystroke and subsumes the word separator
  (pick a suggestion, the space comes free),
* a fully typed word costs its key presses plus one separator,
* on layouts with several views, moving between keys that live in
  different views costs one switch press,
* reference cost n_c for a word is its codepoint length plus one
  separator, so an engine that never suggests anything scores exactly
  zero savings.

Words the layout cannot produce are skipped from the keystroke tallies
(and reported), but still committed so the context stays faithful and
still count toward the prediction denominator. Sessions never learn
during measurement: the harness scores the preload models, and learning
would let one arm of an A/B run drift away from the other.

Sentences are independent (fresh session each), so runs parallelize
trivially and the report reducer is a plain sum.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .lexicon import Lexicon, iter_lines
from .modelfile import MODE_NATIVE
from .rules import KeyLayout, RuleSet, parse_layout, variant_sites

# ---------------------------------------------------------------------------
# typing simulation


@dataclass(frozen=True)
class SimConfig:
    predict_k: int = 3               # prediction slots checked per word
    count_selection: bool = True     # selection taps count as keystrokes

    def __post_init__(self):
        if self.predict_k < 1:
            raise ValueError("predict_k must be >= 1")


@dataclass(frozen=True)
class SentenceStats:
    n_c: int                         # reference characters incl. separators
    n_k: int                         # presses + selections + separators
    prediction_hits: List[bool]      # one flag per word, queried pre-typing
    skipped_words: List[str]         # untypeable on this layout
    keystroke_seconds: List[float]   # candidate-computation time per press


def _key_sequence(session, word: str) -> Optional[List[str]]:
    """The presses that spell out word, or None if the layout cannot."""
    if session.mode == MODE_NATIVE:
        rep_of = session.model.layout.representative_of
        keys = []
        for ch in word:
            rep = rep_of.get(ch)
            if rep is None:
                return None
            keys.append(rep)
        return keys
    keys = []
    for ch in word:
        low = ch.lower()
        if not "a" <= low <= "z":
            return None
        keys.append(low)
    return keys


def simulate_typing(sentence: Sequence[str], session_factory,
                    sim: Optional[SimConfig] = None) -> SentenceStats:
    """Replay one sentence through a fresh session and count keystrokes."""
    if not sentence:
        raise ValueError("sentence must be nonempty")
    sim = sim or SimConfig()
    session = session_factory()
    layout = session.model.layout
    view_of: Mapping[str, int] = layout.view_of if layout is not None else {}
    cur_view: Optional[int] = None
    sel_cost = 1 if sim.count_selection else 0

    n_c = n_k = 0
    hits: List[bool] = []
    skipped: List[str] = []
    timings: List[float] = []

    for word in sentence:
        predicted = {c.surface for c in session.predict(sim.predict_k)}
        hit = word in predicted
        hits.append(hit)
        if hit:
            n_c += len(word) + 1
            n_k += sel_cost
            session.commit(word, learn=False)
            continue
        keys = _key_sequence(session, word)
        if keys is None:
            skipped.append(word)
            session.commit(word, learn=False)
            continue
        n_c += len(word) + 1
        strokes = 0
        selected = False
        for key in keys:
            view = view_of.get(key)
            if view is not None:
                if cur_view is not None and view != cur_view:
                    strokes += 1
                cur_view = view
            started = time.perf_counter()
            candidates = session.press_key(key)
            timings.append(time.perf_counter() - started)
            strokes += 1
            if any(c.surface == word for c in candidates):
                strokes += sel_cost
                selected = True
                break
        if not selected:
            strokes += 1  # the word separator
        n_k += strokes
        session.commit(word, learn=False)
    return SentenceStats(n_c, n_k, hits, skipped, timings)


# ---------------------------------------------------------------------------
# summary formulas


def compute_ksr(n_c: int, n_k: int) -> float:
    """Percent of reference keystrokes saved; negative when typing with
    the engine costs extra."""
    if n_c <= 0:
        raise ValueError("n_c must be positive")
    return (n_c - n_k) / n_c * 100.0


def compute_nwp(hits: int, total: int) -> float:
    """Percent of word positions whose word was among the predictions."""
    if total <= 0:
        raise ValueError("total must be positive")
    return hits / total * 100.0


def _nearest_rank(sorted_vals: List[float], percent: float) -> float:
    idx = max(0, math.ceil(percent / 100.0 * len(sorted_vals)) - 1)
    return sorted_vals[idx]


@dataclass(frozen=True)
class ECReport:
    precision: float
    recall: float
    f1: float
    true_positives: int
    false_positives: int
    false_negatives: int
    degenerate: bool     # both denominators were empty; zeros by policy


def compute_ec(pairs: Sequence[Tuple[str, str]], session) -> ECReport:
    """Confusion matrix over commit-time correction decisions.

    Each pair is (typed, intended). A silent correction to the intended
    word is a true positive, to anything else a false positive; a wrong
    token left standing (accepted or merely offered about) is a false
    negative. Pairs typed correctly and left alone carry no signal.
    """
    if not pairs:
        raise ValueError("pairs must be nonempty")
    tp = fp = fn = 0
    for typed, intended in pairs:
        decision = session.auto_correct(typed)
        if decision.action == "auto-correct":
            if decision.surface == intended:
                tp += 1
            else:
                fp += 1
        elif typed != intended:
            fn += 1
    degenerate = (tp + fp == 0) and (tp + fn == 0)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (2.0 * precision * recall / (precision + recall)
          if precision + recall else 0.0)
    return ECReport(precision, recall, f1, tp, fp, fn, degenerate)


# ---------------------------------------------------------------------------
# aggregated report


@dataclass(frozen=True)
class EvalReport:
    ksr: float
    nwp: float
    n_c: int
    n_k: int
    prediction_hits: int
    word_count: int
    skipped_words: int
    ec: Optional[ECReport] = None
    latency_p50_ms: Optional[float] = None
    latency_p95_ms: Optional[float] = None
    metadata: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "ksr": self.ksr,
            "nwp": self.nwp,
            "n_c": self.n_c,
            "n_k": self.n_k,
            "prediction_hits": self.prediction_hits,
            "word_count": self.word_count,
            "skipped_words": self.skipped_words,
            "ec_precision": self.ec.precision if self.ec else None,
            "ec_recall": self.ec.recall if self.ec else None,
            "ec_f1": self.ec.f1 if self.ec else None,
            "ec_degenerate": self.ec.degenerate if self.ec else None,
            "latency_p50_ms": self.latency_p50_ms,
            "latency_p95_ms": self.latency_p95_ms,
        }
        out.update(self.metadata)
        return out


def evaluate_testset(testset: Sequence[Sequence[str]], session_factory,
                     sim: Optional[SimConfig] = None, *,
                     timing: bool = False,
                     metadata: Optional[dict] = None) -> EvalReport:
    """Run the simulator over every sentence and fold the tallies.

    Timing percentiles are filled in only on request: they vary run to
    run, and leaving them out keeps reports byte-reproducible.
    """
    if not testset:
        raise ValueError("empty testset")
    n_c = n_k = hits = words = skipped = 0
    timings: List[float] = []
    for sentence in testset:
        stats = simulate_typing(sentence, session_factory, sim)
        n_c += stats.n_c
        n_k += stats.n_k
        hits += sum(stats.prediction_hits)
        words += len(stats.prediction_hits)
        skipped += len(stats.skipped_words)
        timings.extend(stats.keystroke_seconds)
    p50 = p95 = None
    if timing and timings:
        ordered = sorted(t * 1000.0 for t in timings)
        p50 = _nearest_rank(ordered, 50.0)
        p95 = _nearest_rank(ordered, 95.0)
    return EvalReport(compute_ksr(n_c, n_k), compute_nwp(hits, words),
                      n_c, n_k, hits, words, skipped,
                      latency_p50_ms=p50, latency_p95_ms=p95,
                      metadata=dict(metadata or {}))


def load_testset(source) -> List[List[str]]:
    """One sentence per line, whitespace-separated tokens."""
    sentences = []
    for line in iter_lines(source):
        if line is None:
            continue
        tokens = line.split()
        if tokens:
            sentences.append(tokens)
    return sentences


# ---------------------------------------------------------------------------
# layout predictability


@dataclass(frozen=True)
class GroupingSpec:
    """A consonant partition plus the one shared vowel key.

    An empty vowel key means vowels stay unmerged (the identity end of
    the sweep, where every codepoint is its own key).
    """

    consonant_keys: Tuple[Tuple[str, ...], ...]
    vowel_key: Tuple[str, ...] = ()

    def __post_init__(self):
        seen: set = set()
        for key in self.consonant_keys:
            if not key:
                raise ValueError("empty consonant key")
            for ch in key:
                if ch in seen:
                    raise ValueError(f"codepoint {ch!r} on two keys")
                seen.add(ch)
        overlap = seen.intersection(self.vowel_key)
        if overlap:
            raise ValueError(f"codepoints on both key kinds: {sorted(overlap)!r}")

    def rep_map(self) -> Dict[str, str]:
        out = {}
        for key in self.consonant_keys:
            rep = min(key)
            for ch in key:
                out[ch] = rep
        if self.vowel_key:
            rep = min(self.vowel_key)
            for ch in self.vowel_key:
                out[ch] = rep
        return out

    @property
    def consonants_per_key(self) -> float:
        total = sum(len(k) for k in self.consonant_keys)
        return total / len(self.consonant_keys)


def layout_predictability(lex: Lexicon,
                          grouping: Union[GroupingSpec, Mapping[str, str]]) -> float:
    """Percent of vocabulary reachable within three suggestions.

    Words are bucketed by their key sequence; inside a bucket the
    frequency order decides who fits the three suggestion slots.
    Codepoints absent from the grouping map to themselves.
    """
    rep_of = grouping.rep_map() if isinstance(grouping, GroupingSpec) else grouping
    if len(lex) == 0:
        return 100.0
    groups: Dict[str, int] = {}
    good = 0
    for rank in range(len(lex)):
        seq = "".join(rep_of.get(ch, ch) for ch in lex.word(rank))
        # ranks arrive in frequency order, so the first three sightings
        # of a sequence are exactly its top-3 suggestions
        seen = groups.get(seq, 0)
        if seen < 3:
            good += 1
        groups[seq] = seen + 1
    return 100.0 * good / len(lex)


# ---------------------------------------------------------------------------
# grouping sweep

# consonant inventories in phonetic-class order: the five stop rows by
# place of articulation, then approximants, then fricatives
SCRIPT_CONSONANT_CLASSES = {
    "devanagari": ("कखगघङ", "चछजझञ", "टठडढण", "तथदधन", "पफबभम",
                   "यरलव", "शषसह"),
    "bengali": ("কখগঘঙ", "চছজঝঞ", "টঠডঢণ", "তথদধন", "পফবভম",
                "যরল", "শষসহ", "ড়ঢ়য়"),
}

# independent vowels, their dependent signs, and the combining marks
# that ride along with vowels on the shared key
SCRIPT_VOWELS = {
    "devanagari": "अआइईउऊऋएऐओऔािीुूृेैोौंःँ्",
    "bengali": "অআইঈউঊঋএঐওঔািীুূৃেৈোৌংঃঁ্",
}


@dataclass(frozen=True)
class SweepPoint:
    consonants_per_key: float
    predictability: float


@dataclass(frozen=True)
class SweepResult:
    points: Tuple[SweepPoint, ...]
    elbow: Optional[int]    # index into points, None below three points


def elbow_index(ys: Sequence[float]) -> Optional[int]:
    """Interior index with the largest discrete second difference (the
    sharpest turn of the curve); first index wins ties."""
    best_i: Optional[int] = None
    best_v = -math.inf
    for i in range(1, len(ys) - 1):
        v = ys[i + 1] - 2.0 * ys[i] + ys[i - 1]
        if v > best_v:
            best_i, best_v = i, v
    return best_i


def _merge_adjacent(groups: List[Tuple[str, ...]]) -> List[Tuple[str, ...]]:
    out = []
    for i in range(0, len(groups), 2):
        if i + 1 < len(groups):
            out.append(groups[i] + groups[i + 1])
        else:
            out.append(groups[i])
    return out


def sweep_groupings(lex: Lexicon, script: str,
                    max_per_key: float = 64.0) -> SweepResult:
    """Predictability at progressively coarser consonant groupings.

    Level zero is the identity keyboard (every codepoint its own key,
    100% by construction). Level one merges the phonetic classes onto
    one key each and all vowels onto one shared key; each further level
    merges adjacent consonant keys pairwise. Every level refines the
    next, so the curve is monotone non-increasing.
    """
    try:
        classes = SCRIPT_CONSONANT_CLASSES[script]
    except KeyError:
        raise ValueError(
            f"unknown script {script!r}; have {sorted(SCRIPT_CONSONANT_CLASSES)}")
    vowels = tuple(SCRIPT_VOWELS[script])
    total = sum(len(c) for c in classes)

    points = [SweepPoint(1.0, layout_predictability(lex, {}))]
    groups: List[Tuple[str, ...]] = [tuple(c) for c in classes]
    while True:
        per_key = total / len(groups)
        if per_key > max_per_key:
            break
        spec = GroupingSpec(tuple(groups), vowels)
        points.append(SweepPoint(per_key, layout_predictability(lex, spec)))
        if len(groups) == 1:
            break
        groups = _merge_adjacent(groups)
    ys = [p.predictability for p in points]
    return SweepResult(tuple(points), elbow_index(ys))


# ---------------------------------------------------------------------------
# variant injection and the conventional baseline


@dataclass(frozen=True)
class InjectionResult:
    testset: List[List[str]]
    pairs: List[Tuple[str, str]]          # (variant typed, original intended)
    positions: List[Tuple[int, int]]      # (sentence, word) of each injection


def inject_variants(testset: Sequence[Sequence[str]], ruleset: RuleSet,
                    rate: float, lexicon: Lexicon,
                    seed: int = 0) -> InjectionResult:
    """Corrupt a fixed fraction of eligible tokens with one spelling swap.

    Eligible tokens have at least one image-preserving fragment swap
    whose result falls outside the vocabulary; int(rate * eligible) of
    them, chosen by the seeded generator, get one such swap applied.
    Every injected token rewrites to the same base form as its original.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must be within [0, 1]")
    rng = random.Random(seed)
    eligible = []
    for si, sentence in enumerate(testset):
        for wi, word in enumerate(sentence):
            sites = [s for s in variant_sites(word, ruleset)
                     if lexicon.rank(s.result) is None]
            if sites:
                eligible.append((si, wi, sites))
    count = int(rate * len(eligible))
    chosen = sorted(rng.sample(range(len(eligible)), count))
    out = [list(sentence) for sentence in testset]
    pairs: List[Tuple[str, str]] = []
    positions: List[Tuple[int, int]] = []
    for idx in chosen:
        si, wi, sites = eligible[idx]
        site = rng.choice(sites)
        out[si][wi] = site.result
        pairs.append((site.result, testset[si][wi]))
        positions.append((si, wi))
    return InjectionResult(out, pairs, positions)


def conventional_layout(layout: KeyLayout) -> KeyLayout:
    """The one-character-per-key version of a layout, views preserved.

    This is the unambiguous baseline keyboard: no sibling collisions,
    but reaching a codepoint in another view costs a switch press.
    """
    keys = [{"members": [member], "view": key.view, "role": key.role}
            for key in layout.keys for member in key.members]
    return parse_layout({"language": layout.language, "keys": keys})
