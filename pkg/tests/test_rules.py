import json

import pytest
from hypothesis import given, assume, settings, strategies as st

from ambitype import rules
from ambitype.errors import ParseError, ValidationError

ROMAN_ALPHABET = "aabcdefghijklmnoprstuvwyz"


@pytest.fixture(scope="module")
def hinglish():
    return rules.load_builtin_ruleset("hinglish")


@pytest.fixture(scope="module")
def tenglish():
    return rules.load_builtin_ruleset("tenglish")


@pytest.fixture(scope="module")
def hindi_layout():
    return rules.load_builtin_layout("hi")


@pytest.fixture(scope="module")
def hindi_rules(hindi_layout):
    return rules.derive_native_ruleset(hindi_layout)


roman_words = st.text(alphabet=sorted(set(ROMAN_ALPHABET)), min_size=1, max_size=14)


def all_roman_rulesets():
    return [rules.load_builtin_ruleset(name) for name in rules.BUILTIN_RULESETS]


# ---------------------------------------------------------------------------
# parsing and validation


def test_builtin_rulesets_load():
    sizes = {name: len(rules.load_builtin_ruleset(name).equivalences)
             for name in rules.BUILTIN_RULESETS}
    assert sizes["hinglish"] == 14
    assert sizes["benglish"] == 15
    assert sizes["marathinglish"] == 10
    assert sizes["tenglish"] == 20


def test_rewrites_cover_both_fragments(hinglish):
    patterns = {(r.pattern, r.anchor): r.replacement for r in hinglish.rewrites}
    assert patterns[("aa", None)] == "A"
    assert patterns[("a", None)] == "A"
    assert patterns[("sh", None)] == "S"
    assert patterns[("s", None)] == "S"
    assert patterns[("ain", rules.ANCHOR_END)] == "AI"
    assert patterns[("ai", rules.ANCHOR_END)] == "AI"


def test_anchor_markers_parse():
    rs = rules.parse_ruleset("<ye\t<e\nly>\tli>\n")
    anchors = {(eq.p, eq.q): eq.anchor for eq in rs.equivalences}
    assert anchors[("ye", "e")] == rules.ANCHOR_START
    assert anchors[("ly", "li")] == rules.ANCHOR_END


def test_comments_and_blank_lines_ignored():
    rs = rules.parse_ruleset("# header\n\naa\ta\n")
    assert len(rs.equivalences) == 1


@pytest.mark.parametrize(
    "text",
    [
        "aa\ta\textra",          # three fields
        "aa\t",                  # empty canonical
        "<a>a\ta",               # two anchors on one fragment
        "a<b\tab",               # stray marker
        "ain>\tai",              # anchor disagreement
    ],
)
def test_malformed_lines_rejected(text):
    with pytest.raises(ParseError):
        rules.parse_ruleset(text)


def test_uppercase_fragment_rejected():
    with pytest.raises(ValidationError):
        rules.parse_ruleset("aA\ta")


def test_identical_fragments_rejected():
    with pytest.raises(ValidationError):
        rules.parse_ruleset("aa\taa")


def test_conflicting_duplicate_pattern_rejected():
    with pytest.raises(ValidationError):
        rules.parse_ruleset("sh\ts\nsh\tx\n")


def test_redundant_duplicate_pattern_allowed():
    rs = rules.parse_ruleset("ee\ti\nii\ti\n")
    assert {(r.pattern, r.replacement) for r in rs.rewrites} == {
        ("ee", "I"),
        ("ii", "I"),
        ("i", "I"),
    }


def test_layout_duplicate_member_rejected():
    obj = {
        "language": "xx",
        "keys": [
            {"members": ["a", "b"], "representative": "a"},
            {"members": ["b", "c"], "representative": "b"},
        ],
    }
    with pytest.raises(ValidationError):
        rules.parse_layout(obj)


def test_layout_wrong_representative_rejected():
    obj = {"language": "xx", "keys": [{"members": ["b", "a"], "representative": "b"}]}
    with pytest.raises(ValidationError):
        rules.parse_layout(obj)


def test_layout_representative_defaults_to_min():
    obj = {"language": "xx", "keys": [{"members": ["d", "b", "c"]}]}
    layout = rules.parse_layout(obj)
    assert layout.keys[0].representative == "b"


def test_layout_multi_codepoint_member_rejected():
    obj = {"language": "xx", "keys": [{"members": ["ab"], "representative": "ab"}]}
    with pytest.raises(ValidationError):
        rules.parse_layout(obj)


def test_builtin_layouts_load():
    for lang in rules.BUILTIN_LAYOUTS:
        layout = rules.load_builtin_layout(lang)
        assert layout.language == lang
        assert layout.representatives <= layout.typeable
        assert layout.n_views == 2
    hi = rules.load_builtin_layout("hi")
    consonants = [k for k in hi.keys if k.role == "consonants"]
    assert sum(len(k.members) for k in consonants) == 33
    assert len(consonants) == 7


def test_derive_native_ruleset_has_no_identity_rules(hindi_rules, hindi_layout):
    assert all(r.pattern != r.replacement for r in hindi_rules.rewrites)
    # every non-representative member gets a rule
    n_members = sum(len(k.members) for k in hindi_layout.keys)
    assert len(hindi_rules.rewrites) == n_members - len(hindi_layout.keys)


def test_native_completeness(hindi_layout, hindi_rules):
    for ch in hindi_layout.typeable:
        assert hindi_layout.representative_of[ch] in hindi_layout.representatives
        assert rules.transform(ch, hindi_rules) == hindi_layout.representative_of[ch]


def test_transform_rejects_whitespace(hinglish):
    with pytest.raises(ValueError):
        rules.transform("do words", hinglish)


# ---------------------------------------------------------------------------
# scan properties


@given(word=roman_words)
@settings(max_examples=300)
def test_transform_idempotent_roman(word):
    for rs in all_roman_rulesets():
        image = rules.transform(word, rs)
        assert rules.transform(image, rs) == image


@given(data=st.data())
@settings(max_examples=300)
def test_transform_idempotent_native(hindi_layout, hindi_rules, data):
    alphabet = sorted(hindi_layout.typeable)
    word = data.draw(st.text(alphabet=alphabet, min_size=1, max_size=10))
    image = rules.transform(word, hindi_rules)
    assert rules.transform(image, hindi_rules) == image
    assert all(ch in hindi_layout.representatives for ch in image)


@given(word=roman_words, data=st.data())
@settings(max_examples=500)
def test_variant_sites_preserve_image(word, data):
    rs = data.draw(st.sampled_from(all_roman_rulesets()))
    sites = rules.variant_sites(word, rs)
    assume(sites)
    site = data.draw(st.sampled_from(sites))
    assert site.result != word
    assert rules.transform(site.result, rs) == rules.transform(word, rs)


def test_variant_sites_exclude_straddled_occurrences(hinglish):
    # widening either 'a' of "maal" to "aa" would land inside the existing
    # "aa" run ("maaal" parses (aa)(a) -> AA, but "maal" parses (aa) -> A),
    # so the guard must reject both a -> aa swaps
    results = {s.result for s in rules.variant_sites("maal", hinglish)}
    assert "maaal" not in results
    # collapsing the clean "aa" occurrence is safe and stays available
    assert "mal" in results
    # "kafi" has a clean widening site: a -> aa
    sites = rules.variant_sites("kafi", hinglish, directions=("q_to_p",))
    assert "kaafi" in {s.result for s in sites}


def test_variant_sites_respect_anchors(hinglish):
    sites = rules.variant_sites("hai", hinglish, directions=("q_to_p",))
    assert "hain" in {s.result for s in sites}
    # no site may rewrite 'ai' mid-word via the end-anchored pair
    sites = rules.variant_sites("maike", hinglish)
    assert all(s.rule.p != "ain" for s in sites)


def test_transform_deterministic(hinglish):
    w = "shahenshah"
    assert rules.transform(w, hinglish) == rules.transform(w, hinglish)


def test_equal_length_anchored_rule_beats_unanchored():
    rs = rules.parse_ruleset("e>\to>\nex\tev\n")
    # at the last position only the anchored rule applies
    assert rules.transform("ze", rs) == "zO"
    # elsewhere 'e' passes through untouched
    assert rules.transform("zez", rs) == "zez"
