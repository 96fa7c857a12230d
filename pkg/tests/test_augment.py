import pytest
from hypothesis import given, strategies as st

from oracles import enumerate_windows
from skeltag.augment import WindowSpec, augment_corpus, expected_count, windows
from skeltag.corpus import Corpus, TaggedSentence


def sent(words, tags=None):
    return TaggedSentence(words, tags or ["X"] * len(words))


def test_default_windows_abc():
    frags = windows(sent(["a", "b", "c"]))
    assert [f.words for f in frags] == [("a",), ("b",), ("c",), ("a", "b"), ("b", "c"), ("a", "b", "c")]


def test_single_word_identity():
    s = sent(["a"], ["NOUN"])
    assert windows(s) == [s]


def test_min_max_window():
    frags = windows(sent(list("abcd")), WindowSpec(2, 3))
    assert [(len(f), f.words[0]) for f in frags] == [(w, "abcd"[s]) for w, s in enumerate_windows(4, 2, 3)]
    assert len(frags) == 5


def test_min_above_length_is_empty():
    assert windows(sent(list("abc")), WindowSpec(min_size=5)) == []


def test_bad_spec():
    with pytest.raises(ValueError):
        WindowSpec(min_size=0)
    with pytest.raises(ValueError):
        WindowSpec(3, 2)


def test_count_19_words():
    c = Corpus(tuple(sent([f"w{i}" for i in range(19)]) for _ in range(100)))
    assert len(augment_corpus(c)) == 19_000


def test_dedup_collapses_identical():
    c = Corpus((sent(["a", "a"], ["X", "X"]),))
    out = augment_corpus(c, WindowSpec(dedup=True))
    assert [f.words for f in out] == [("a",), ("a", "a")]


def test_dedup_distinguishes_tags():
    c = Corpus((sent(["a", "a"], ["X", "Y"]),))
    assert len(augment_corpus(c, WindowSpec(dedup=True))) == 3


def test_empty_range():
    c = Corpus((sent(list("abcd")), sent(list("efgh"))))
    assert len(augment_corpus(c, WindowSpec(min_size=5))) == 0


lengths = st.lists(st.integers(1, 12), min_size=1, max_size=10)


@given(lengths)
def test_count_law(ns):
    c = Corpus(tuple(sent([f"w{j}" for j in range(n)]) for n in ns))
    assert len(augment_corpus(c)) == expected_count(ns) == sum(len(enumerate_windows(n)) for n in ns)


@given(st.lists(st.sampled_from("ab"), min_size=1, max_size=8), st.integers(1, 4), st.integers(0, 4))
def test_tags_stay_aligned(ws, lo, extra):
    tags = [t.upper() for t in ws]
    s = TaggedSentence(ws, tags)
    for f in windows(s, WindowSpec(lo, lo + extra)):
        # every fragment occurs at some offset with matching tags
        n = len(f)
        assert any(s.words[i : i + n] == f.words and s.tags[i : i + n] == f.tags for i in range(len(s) - n + 1))


@given(st.lists(st.lists(st.sampled_from("ab"), min_size=1, max_size=6), min_size=1, max_size=5))
def test_dedup_is_subsequence(sents):
    c = Corpus(tuple(sent(w, [x.upper() for x in w]) for w in sents))
    full = list(augment_corpus(c))
    dedup = list(augment_corpus(c, WindowSpec(dedup=True)))
    it = iter(full)
    assert all(any(x == y for y in it) for x in dedup)
    assert len(set(dedup)) == len(dedup)
