"""Two-column tagged corpora: ``word<TAB>tag`` lines, blank line between sentences."""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from skeltag.errors import CorpusError

_TAG_RE = re.compile(r"[A-Z_]+")
_WS_RE = re.compile(r"\s")


def check_tag(tag: str) -> str:
    if not _TAG_RE.fullmatch(tag):
        raise CorpusError(f"invalid tag {tag!r}: expected [A-Z_]+")
    return tag


def check_word(word: str) -> str:
    if not word or _WS_RE.search(word):
        raise CorpusError(f"invalid word {word!r}: must be non-empty without whitespace")
    return word


@dataclass(frozen=True)
class TaggedSentence:
    words: tuple[str, ...]
    tags: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "tags", tuple(self.tags))
        if len(self.words) != len(self.tags):
            raise CorpusError(f"{len(self.words)} words but {len(self.tags)} tags")
        if not self.words:
            raise CorpusError("empty sentence")
        for w in self.words:
            check_word(w)
        for t in self.tags:
            check_tag(t)

    def __len__(self):
        return len(self.words)


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[TaggedSentence, ...]
    source_name: str = field(default="<memory>", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    @property
    def n_words(self) -> int:
        return sum(len(s) for s in self.sentences)


class TagSet:
    """Sorted, duplicate-free tag inventory with dense integer ids."""

    def __init__(self, tags):
        tags = sorted(set(tags))
        if not tags:
            raise CorpusError("empty tag set")
        for t in tags:
            check_tag(t)
        self.tags: tuple[str, ...] = tuple(tags)
        self.index: dict[str, int] = {t: i for i, t in enumerate(self.tags)}

    def __len__(self):
        return len(self.tags)

    def __getitem__(self, i: int) -> str:
        return self.tags[i]

    def __contains__(self, tag) -> bool:
        return tag in self.index

    def __eq__(self, other):
        return isinstance(other, TagSet) and self.tags == other.tags

    def __hash__(self):
        return hash(self.tags)

    def __repr__(self):
        return f"TagSet({list(self.tags)!r})"

    def id_of(self, tag: str) -> int:
        try:
            return self.index[tag]
        except KeyError:
            raise CorpusError(f"unknown tag {tag!r}") from None


def parse_conll(text: str, source_name: str = "<string>") -> Corpus:
    """Parse ``word<TAB>tag`` text. Raises CorpusError with the offending line number."""
    sentences = []
    words, tags = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            if words:
                sentences.append(TaggedSentence(words, tags))
                words, tags = [], []
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise CorpusError(f"expected 2 tab-separated fields, got {len(fields)}", line=lineno)
        word, tag = fields
        if not word or not tag:
            raise CorpusError("empty word or tag field", line=lineno)
        try:
            words.append(check_word(word))
            tags.append(check_tag(tag))
        except CorpusError as e:
            raise CorpusError(str(e), line=lineno) from None
    if words:
        sentences.append(TaggedSentence(words, tags))
    if not sentences:
        raise CorpusError(f"{source_name}: corpus contains no sentences")
    return Corpus(tuple(sentences), source_name)


def write_conll(corpus: Corpus) -> str:
    if not corpus.sentences:
        raise CorpusError("cannot write an empty corpus")
    parts = []
    for sent in corpus.sentences:
        for w, t in zip(sent.words, sent.tags):
            parts.append(f"{w}\t{t}\n")
        parts.append("\n")
    return "".join(parts)


def read_corpus(path) -> Corpus:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise CorpusError(f"corpus file not found: {path}") from None
    except UnicodeDecodeError as e:
        raise CorpusError(f"{path}: not valid UTF-8 ({e})") from None
    return parse_conll(text, source_name=str(path))


def save_corpus(corpus: Corpus, path) -> None:
    Path(path).write_text(write_conll(corpus), encoding="utf-8")


def split(corpus: Corpus, val_ratio: float, seed: int) -> tuple[Corpus, Corpus]:
    """Deterministic shuffled train/validation split.

    ``|val| = round(val_ratio * N)`` clamped to ``[1, N - 1]``.
    """
    if not 0.0 < val_ratio < 1.0:
        raise CorpusError(f"val_ratio must be in (0, 1), got {val_ratio}")
    n = len(corpus)
    if n < 2:
        raise CorpusError(f"need at least 2 sentences to split, got {n}")
    n_val = min(max(round(val_ratio * n), 1), n - 1)
    order = list(range(n))
    random.Random(seed).shuffle(order)
    val_idx = sorted(order[:n_val])
    train_idx = sorted(order[n_val:])
    train = Corpus(tuple(corpus.sentences[i] for i in train_idx), corpus.source_name + ":train")
    val = Corpus(tuple(corpus.sentences[i] for i in val_idx), corpus.source_name + ":val")
    return train, val


def tagset_of(corpus: Corpus) -> TagSet:
    return TagSet(t for s in corpus.sentences for t in s.tags)


def sample_corpus() -> Corpus:
    """The bundled 100-sentence Russian sample tagged with Universal POS tags."""
    text = resources.files("skeltag.data").joinpath("sample.conll").read_text(encoding="utf-8")
    return parse_conll(text, source_name="sample.conll")


def sample_tags() -> list[str]:
    """Tags documented for the bundled sample (one per line in ``sample.tags``)."""
    text = resources.files("skeltag.data").joinpath("sample.tags").read_text(encoding="utf-8")
    return [line.strip() for line in text.splitlines() if line.strip()]


def sample_path() -> Path:
    return Path(str(resources.files("skeltag.data").joinpath("sample.conll")))
