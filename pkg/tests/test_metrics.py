import pytest
from hypothesis import given, strategies as st

from oracles import brute_force_scores
from skeltag.corpus import Corpus, TaggedSentence, TagSet
from skeltag.errors import AlignmentError, DataError
from skeltag.metrics import (
    ClassCounts,
    EvalReport,
    accuracy,
    confusion_counts,
    f1_of_class,
    majority_baseline,
    weighted_f1,
)

TS = TagSet(["X", "Y"])


def s(tags):
    return TaggedSentence([f"w{i}" for i in range(len(tags))], tags)


def test_confusion_example():
    c = confusion_counts([s(["X", "Y", "Y"])], [s(["X", "X", "Y"])], TS)
    x, y = TS.id_of("X"), TS.id_of("Y")
    assert (c.tp[x], c.fp[x], c.fn[x]) == (1, 0, 1)
    assert (c.tp[y], c.fp[y], c.fn[y]) == (1, 1, 0)
    assert accuracy(c) == pytest.approx(2 / 3, abs=0)


def test_perfect_prediction():
    g = [s(["X", "Y", "Y"]), s(["Y"])]
    c = confusion_counts(g, g, TS)
    assert c.fp == [0, 0] and c.fn == [0, 0]
    assert weighted_f1(c) == 1.0 and accuracy(c) == 1.0


def test_alignment_errors():
    with pytest.raises(AlignmentError, match="sentence 0"):
        confusion_counts([s(["X"])], [s(["X", "Y"])], TS)
    with pytest.raises(AlignmentError):
        confusion_counts([s(["X"])], [], TS)


def _counts(tp, fp, fn):
    c = ClassCounts.zeros(TagSet(["A"]))
    c.tp[0], c.fp[0], c.fn[0] = tp, fp, fn
    return c


def test_f1_values():
    assert f1_of_class(_counts(3, 1, 1), "A") == 0.75
    assert f1_of_class(_counts(5, 0, 0), "A") == 1.0
    assert f1_of_class(_counts(0, 2, 0), "A") == 0.0
    assert f1_of_class(_counts(0, 0, 0), "A") == 0.0


def test_f1_unknown_tag():
    with pytest.raises(Exception):
        f1_of_class(_counts(1, 0, 0), "B")


def test_weighted_two_classes():
    # X: 3 gold all right (F1 1.0); Y: 1 gold, predicted as Z (F1 0.0)
    ts = TagSet(["X", "Y", "Z"])
    c = confusion_counts([s(["X", "X", "X", "Z"])], [s(["X", "X", "X", "Y"])], ts)
    assert f1_of_class(c, "X") == 1.0
    assert f1_of_class(c, "Y") == 0.0
    assert weighted_f1(c) == 0.75  # (3 * 1.0 + 1 * 0.0) / 4; Z has no support


def test_weighted_single_class():
    c = confusion_counts([s(["X", "X"])], [s(["X", "X"])], TagSet(["X"]))
    assert weighted_f1(c) == f1_of_class(c, "X") == 1.0


def test_empty_counts_error():
    c = ClassCounts.zeros(TS)
    with pytest.raises(DataError):
        weighted_f1(c)
    with pytest.raises(DataError):
        accuracy(c)


def test_three_of_four():
    c = confusion_counts([s(["X", "X", "Y", "Y"])], [s(["X", "X", "Y", "X"])], TS)
    assert accuracy(c) == 0.75


def test_majority_baseline_accuracy():
    train = Corpus((s(["X", "X", "Y"]),))
    val = Corpus((s(["X", "Y", "Y", "Y"]),))
    r = majority_baseline(train, val, TS)
    assert r.accuracy == 0.25


def test_report_json_sorted():
    import json

    c = confusion_counts([s(["Y", "X"])], [s(["X", "X"])], TS)
    d = json.loads(EvalReport.from_counts(c).to_json())
    assert [row["tag"] for row in d["classes"]] == ["X", "Y"]
    assert d["total_words"] == 2


pairs = st.integers(1, 5).flatmap(
    lambda k: st.integers(1, 200).flatmap(
        lambda n: st.tuples(
            st.just(k),
            st.lists(st.integers(0, k - 1), min_size=n, max_size=n),
            st.lists(st.integers(0, k - 1), min_size=n, max_size=n),
        )
    )
)
NAMES = ["A", "B", "C", "D", "E"]


@given(pairs)
def test_oracle_equivalence(p):
    k, pred, gold = p
    names = NAMES[:k]
    pt, gt = [names[i] for i in pred], [names[i] for i in gold]
    c = confusion_counts([s(pt)], [s(gt)], TagSet(names))
    f1, wf1, acc = brute_force_scores(pt, gt, names)
    for a in names:
        assert f1_of_class(c, a) == pytest.approx(f1[a], abs=1e-12)
    assert weighted_f1(c) == pytest.approx(wf1, abs=1e-12)
    assert accuracy(c) == pytest.approx(acc, abs=1e-12)


@given(pairs)
def test_identities(p):
    k, pred, gold = p
    names = NAMES[:k]
    pt, gt = [names[i] for i in pred], [names[i] for i in gold]
    c = confusion_counts([s(pt)], [s(gt)], TagSet(names))
    assert sum(c.fp) == sum(c.fn)
    assert sum(c.tp) == sum(a == b for a, b in zip(pt, gt))
    assert sum(c.support(i) for i in range(k)) == len(gt)
    w = weighted_f1(c)
    assert 0.0 <= w <= 1.0
    assert (w == 1.0) == (pt == gt)
    assert (accuracy(c) == 0.0) == all(a != b for a, b in zip(pt, gt))
