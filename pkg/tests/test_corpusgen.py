"""Generator determinism and the statistical shape the metrics rely on."""

from collections import Counter

import pytest

from ambitype import corpusgen
from ambitype.lexicon import build_lexicon
from ambitype.rules import load_builtin_layout, load_builtin_ruleset, variant_sites


def test_generation_is_deterministic():
    a = list(corpusgen.generate_corpus("hinglish", 40, 300, seed=9))
    b = list(corpusgen.generate_corpus("hinglish", 40, 300, seed=9))
    assert a == b
    c = list(corpusgen.generate_corpus("hinglish", 40, 300, seed=10))
    assert a != c


def test_coverage_pins_distinct_type_count():
    lines = list(corpusgen.generate_corpus("hinglish", 80, 500, seed=1))
    types = {tok for line in lines for tok in line.split()}
    assert len(types) == 500
    lex = build_lexicon(lines, k=500)
    assert len(lex) == 500


def test_vocabulary_independent_of_sentence_count():
    v = corpusgen.build_vocabulary("hindi", 200, seed=4)
    assert v == corpusgen.build_vocabulary("hindi", 200, seed=4)
    short = list(corpusgen.generate_corpus("hindi", 5, 200, seed=4,
                                           coverage=False))
    types = {tok for line in short for tok in line.split()}
    assert types <= set(v)


def test_text_seed_varies_text_only():
    base = list(corpusgen.generate_corpus("hindi", 30, 150, seed=2,
                                          coverage=False))
    held = list(corpusgen.generate_corpus("hindi", 30, 150, seed=2,
                                          coverage=False, text_seed=99))
    assert base != held
    vocab = set(corpusgen.build_vocabulary("hindi", 150, seed=2))
    assert {t for line in held for t in line.split()} <= vocab


def test_hindi_words_typeable_on_bundled_layout():
    layout = load_builtin_layout("hi")
    for word in corpusgen.build_vocabulary("hindi", 300, seed=6):
        assert all(ch in layout.typeable for ch in word), word


def test_hinglish_words_are_plain_ascii_letters():
    for word in corpusgen.build_vocabulary("hinglish", 300, seed=6):
        assert word.isascii() and word.isalpha() and word == word.lower()


def test_hinglish_vocabulary_is_variant_rich():
    rules = load_builtin_ruleset("hinglish")
    vocab = corpusgen.build_vocabulary("hinglish", 200, seed=3)
    eligible = sum(1 for w in vocab if variant_sites(w, rules))
    assert eligible / len(vocab) > 0.5


def test_zipf_head_dominates():
    lines = list(corpusgen.generate_corpus("hinglish", 400, 400, seed=5))
    counts = Counter(tok for line in lines for tok in line.split())
    vocab = corpusgen.build_vocabulary("hinglish", 400, seed=5)
    head = sum(counts[w] for w in vocab[:20])
    tail = sum(counts[w] for w in vocab[-20:])
    assert head > 4 * tail


def test_transitions_are_sticky():
    # the same context word should repeat successors across the corpus
    lines = list(corpusgen.generate_corpus("hinglish", 500, 100, seed=8,
                                           coverage=False))
    followers = {}
    for line in lines:
        toks = line.split()
        for a, b in zip(toks, toks[1:]):
            followers.setdefault(a, Counter())[b] += 1
    vocab = corpusgen.build_vocabulary("hinglish", 100, seed=8)
    top = followers[vocab[0]]
    # far fewer distinct continuations than observations
    assert sum(top.values()) > 2 * len(top)


def test_bad_arguments():
    with pytest.raises(ValueError):
        corpusgen.build_vocabulary("klingon", 10)
    with pytest.raises(ValueError):
        corpusgen.build_vocabulary("hindi", 0)
    with pytest.raises(ValueError):
        list(corpusgen.generate_corpus("hindi", -1, 10))


def test_exhausted_profile_reports_failure():
    corpusgen.PROFILES["tiny"] = lambda rng: rng.choice(["ab", "cd"])
    try:
        with pytest.raises(ValueError):
            corpusgen.build_vocabulary("tiny", 5)
    finally:
        del corpusgen.PROFILES["tiny"]


def test_write_corpus_round_trip(tmp_path):
    p = tmp_path / "c.txt"
    n = corpusgen.write_corpus(p, "hinglish", 25, 120, seed=13)
    lines = p.read_text(encoding="utf-8").splitlines()
    assert len(lines) == n
    assert lines == list(corpusgen.generate_corpus("hinglish", 25, 120, seed=13))
