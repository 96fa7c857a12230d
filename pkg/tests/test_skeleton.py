import logging

import pytest
from hypothesis import given, strategies as st

from skeltag.corpus import TaggedSentence
from skeltag.errors import DataError
from skeltag.skeleton import SkeletonConfig, extract_skeleton, skeletonize_text

MAMA = TaggedSentence(["мама", "мыла", "раму"], ["NOUN", "VERB", "NOUN"])


def test_tag_projection():
    assert extract_skeleton(MAMA) == "NOUN VERB NOUN"


def test_keep_lexical():
    assert extract_skeleton(MAMA, SkeletonConfig({"VERB"})) == "NOUN мыла NOUN"


def test_single_word():
    assert extract_skeleton(TaggedSentence(["да"], ["PART"])) == "PART"


def test_separator():
    assert extract_skeleton(MAMA, SkeletonConfig(separator="|")) == "NOUN|VERB|NOUN"


words = st.text(st.sampled_from("абвгд"), min_size=1, max_size=5)
tags = st.sampled_from(["NOUN", "VERB", "ADJ", "PUNCT"])
sents = st.integers(1, 10).flatmap(
    lambda n: st.builds(TaggedSentence, st.lists(words, min_size=n, max_size=n), st.lists(tags, min_size=n, max_size=n))
)


@given(sents)
def test_position_preserving(s):
    assert len(extract_skeleton(s).split(" ")) == len(s)


@given(sents)
def test_keep_all_is_identity(s):
    assert extract_skeleton(s, SkeletonConfig(set(s.tags))) == " ".join(s.words)


def test_empty_text_rejected(overfit):
    o = overfit
    with pytest.raises(DataError):
        skeletonize_text(o["params"], o["tokenizer"], o["tagset"], "")
    with pytest.raises(DataError):
        skeletonize_text(o["params"], o["tokenizer"], o["tagset"], "  \n\t\n")


def test_unknown_keep_tag(overfit):
    o = overfit
    with pytest.raises(DataError):
        skeletonize_text(o["params"], o["tokenizer"], o["tagset"], "мама", SkeletonConfig({"BOGUS"}))


def test_whitespace_line_skipped(overfit, caplog):
    o = overfit
    text = "\n".join([" ".join(o["corpus"].sentences[0].words), "   ", " ".join(o["corpus"].sentences[1].words)])
    with caplog.at_level(logging.WARNING):
        out = skeletonize_text(o["params"], o["tokenizer"], o["tagset"], text)
    assert len(out) == 2
    assert "whitespace-only" in caplog.text


def test_overfit_skeleton_equals_gold(overfit):
    o = overfit
    text = "\n".join(" ".join(s.words) for s in o["corpus"])
    out = skeletonize_text(o["params"], o["tokenizer"], o["tagset"], text)
    assert out == [extract_skeleton(s) for s in o["corpus"]]
