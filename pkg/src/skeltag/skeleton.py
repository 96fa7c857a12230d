"""Skeletal part-of-speech structure: tags in place of words, except for a
configurable set of tags whose words are kept verbatim."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from skeltag.corpus import TaggedSentence, TagSet
from skeltag.errors import DataError
from skeltag.model import ModelParams, predict_tags
from skeltag.tokenizer import Tokenizer

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SkeletonConfig:
    keep_lexical: frozenset[str] = frozenset()
    separator: str = " "

    def __post_init__(self):
        object.__setattr__(self, "keep_lexical", frozenset(self.keep_lexical))

    def check(self, tagset: TagSet) -> None:
        unknown = sorted(self.keep_lexical - set(tagset.tags))
        if unknown:
            raise DataError(f"keep_lexical tags not in tag set: {unknown}")


def extract_skeleton(sentence: TaggedSentence, cfg: SkeletonConfig = SkeletonConfig()) -> str:
    return cfg.separator.join(
        w if t in cfg.keep_lexical else t for w, t in zip(sentence.words, sentence.tags)
    )


def skeletonize_text(
    params: ModelParams,
    tok: Tokenizer,
    tagset: TagSet,
    raw_text: str,
    cfg: SkeletonConfig = SkeletonConfig(),
    max_len: int | None = None,
) -> list[str]:
    """One skeleton per non-blank input line; words are whitespace-separated."""
    if not raw_text.strip():
        raise DataError("no text to skeletonize")
    cfg.check(tagset)
    out = []
    for lineno, line in enumerate(raw_text.splitlines(), start=1):
        words = line.split()
        if not words:
            if line:
                log.warning("line %d: whitespace-only, skipped", lineno)
            continue
        tagged = predict_tags(params, tok, tagset, words, max_len)
        if len(tagged) < len(words):
            log.warning("line %d: %d words truncated", lineno, len(words) - len(tagged))
        out.append(extract_skeleton(tagged, cfg))
    return out
