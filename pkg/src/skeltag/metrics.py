"""Word-level one-vs-rest counts, per-class F1, support-weighted F1, accuracy."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from skeltag.corpus import Corpus, TaggedSentence, TagSet
from skeltag.errors import AlignmentError, DataError
from skeltag.model import predict_batch
from skeltag.tokenizer import encode_sentence


@dataclass
class ClassCounts:
    tagset: TagSet
    tp: list[int]
    fp: list[int]
    fn: list[int]

    @classmethod
    def zeros(cls, tagset: TagSet) -> "ClassCounts":
        k = len(tagset)
        return cls(tagset, [0] * k, [0] * k, [0] * k)

    def support(self, i: int) -> int:
        return self.tp[i] + self.fn[i]

    @property
    def total_words(self) -> int:
        return sum(self.tp) + sum(self.fn)

    @property
    def correct(self) -> int:
        return sum(self.tp)

    def add(self, pred_tag: str, gold_tag: str) -> None:
        p = self.tagset.id_of(pred_tag)
        g = self.tagset.id_of(gold_tag)
        if p == g:
            self.tp[g] += 1
        else:
            self.fp[p] += 1
            self.fn[g] += 1


def confusion_counts(
    pred: Sequence[TaggedSentence], gold: Sequence[TaggedSentence], tagset: TagSet
) -> ClassCounts:
    if len(pred) != len(gold):
        raise AlignmentError(f"{len(pred)} predicted sentences vs {len(gold)} gold")
    counts = ClassCounts.zeros(tagset)
    for i, (p, g) in enumerate(zip(pred, gold)):
        if len(p.tags) != len(g.tags):
            raise AlignmentError(
                f"sentence {i}: {len(p.tags)} predicted tags vs {len(g.tags)} gold"
            )
        for pt, gt in zip(p.tags, g.tags):
            counts.add(pt, gt)
    return counts


def _f1(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def f1_of_class(counts: ClassCounts, tag: str) -> float:
    """``2 TP / (2 TP + FP + FN)``; 0.0 when the class never occurs."""
    i = counts.tagset.id_of(tag)
    return _f1(counts.tp[i], counts.fp[i], counts.fn[i])


def weighted_f1(counts: ClassCounts) -> float:
    total = counts.total_words
    if total == 0:
        raise DataError("weighted F1 undefined: zero total support")
    acc = 0.0
    for i in range(len(counts.tagset)):
        s = counts.support(i)
        if s:
            acc += s * _f1(counts.tp[i], counts.fp[i], counts.fn[i])
    return acc / total


def accuracy(counts: ClassCounts) -> float:
    total = counts.total_words
    if total == 0:
        raise DataError("accuracy undefined: empty evaluation set")
    return counts.correct / total


@dataclass
class ClassReport:
    tag: str
    precision: float
    recall: float
    f1: float
    support: int
    tp: int
    fp: int
    fn: int


@dataclass
class EvalReport:
    classes: list[ClassReport]
    weighted_f1: float
    accuracy: float
    total_words: int

    @classmethod
    def from_counts(cls, counts: ClassCounts) -> "EvalReport":
        rows = []
        for i, tag in enumerate(counts.tagset.tags):
            tp, fp, fn = counts.tp[i], counts.fp[i], counts.fn[i]
            rows.append(
                ClassReport(
                    tag=tag,
                    precision=tp / (tp + fp) if tp + fp else 0.0,
                    recall=tp / (tp + fn) if tp + fn else 0.0,
                    f1=_f1(tp, fp, fn),
                    support=tp + fn,
                    tp=tp,
                    fp=fp,
                    fn=fn,
                )
            )
        return cls(rows, weighted_f1(counts), accuracy(counts), counts.total_words)

    def to_dict(self) -> dict:
        return {
            "weighted_f1": self.weighted_f1,
            "accuracy": self.accuracy,
            "total_words": self.total_words,
            "classes": [vars(c) for c in sorted(self.classes, key=lambda c: c.tag)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2) + "\n"

    def format_table(self) -> str:
        lines = [f"{'tag':<8} {'prec':>7} {'recall':>7} {'f1':>7} {'support':>8}"]
        for c in sorted(self.classes, key=lambda c: c.tag):
            lines.append(f"{c.tag:<8} {c.precision:7.4f} {c.recall:7.4f} {c.f1:7.4f} {c.support:8d}")
        lines.append("-" * 41)
        lines.append(f"{'weighted F1':<24} {self.weighted_f1:7.4f} {self.total_words:8d}")
        lines.append(f"{'accuracy':<24} {self.accuracy:7.4f}")
        return "\n".join(lines)


def evaluate(params, tok, tagset: TagSet, val: Corpus, max_len: int | None = None, batch_size: int = 64) -> EvalReport:
    """Tag every sentence of ``val`` and score against its gold tags.

    Words cut off by truncation are excluded from scoring on both sides.
    """
    if not len(val):
        raise DataError("cannot evaluate on an empty corpus")
    max_len = max_len or params.config.max_len
    preds, golds = [], []
    sents = list(val.sentences)
    for lo in range(0, len(sents), batch_size):
        chunk = sents[lo : lo + batch_size]
        encs = [encode_sentence(tok, s.words, max_len=max_len) for s in chunk]
        for sent, enc, ids in zip(chunk, encs, predict_batch(params, encs)):
            n = enc.n_words
            if n == 0:
                continue
            preds.append(TaggedSentence(sent.words[:n], [tagset[i] for i in ids]))
            golds.append(TaggedSentence(sent.words[:n], sent.tags[:n]))
    return EvalReport.from_counts(confusion_counts(preds, golds, tagset))


def majority_baseline(train: Corpus, val: Corpus, tagset: TagSet) -> EvalReport:
    """Score of tagging every validation word with the most frequent training tag."""
    freq = {}
    for s in train.sentences:
        for t in s.tags:
            freq[t] = freq.get(t, 0) + 1
    top = min(freq, key=lambda t: (-freq[t], t))
    preds = [TaggedSentence(s.words, [top] * len(s)) for s in val.sentences]
    return EvalReport.from_counts(confusion_counts(preds, list(val.sentences), tagset))
