"""Sliding-window augmentation: every contiguous fragment of every sentence."""

from __future__ import annotations

from dataclasses import dataclass

from skeltag.corpus import Corpus, TaggedSentence


@dataclass(frozen=True)
class WindowSpec:
    """Window sizes in ``[min_size, max_size]``; ``max_size=None`` means sentence length."""

    min_size: int = 1
    max_size: int | None = None
    dedup: bool = False

    def __post_init__(self):
        if self.min_size < 1:
            raise ValueError(f"min_size must be >= 1, got {self.min_size}")
        if self.max_size is not None and self.max_size < self.min_size:
            raise ValueError(f"max_size {self.max_size} < min_size {self.min_size}")


def windows(sentence: TaggedSentence, spec: WindowSpec = WindowSpec()) -> list[TaggedSentence]:
    n = len(sentence)
    hi = n if spec.max_size is None else min(spec.max_size, n)
    out = []
    for w in range(spec.min_size, hi + 1):
        for s in range(0, n - w + 1):
            out.append(TaggedSentence(sentence.words[s : s + w], sentence.tags[s : s + w]))
    return out


def augment_corpus(corpus: Corpus, spec: WindowSpec = WindowSpec()) -> Corpus:
    fragments = []
    seen = set()
    for sent in corpus.sentences:
        for frag in windows(sent, spec):
            if spec.dedup:
                key = (frag.words, frag.tags)
                if key in seen:
                    continue
                seen.add(key)
            fragments.append(frag)
    return Corpus(tuple(fragments), corpus.source_name + ":augmented")


def expected_count(lengths) -> int:
    """Fragment count for default windows without dedup: sum of n(n+1)/2."""
    return sum(n * (n + 1) // 2 for n in lengths)
