"""WordPiece-style byte-pair encoding: words are pre-split on whitespace and
non-initial symbols carry a ``##`` continuation prefix.

Label alignment puts a word's tag on its first subword; every other position
(specials, continuations, padding) gets ``IGNORE``.
"""

from __future__ import annotations

import hashlib
import json
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from skeltag.corpus import TaggedSentence, TagSet
from skeltag.errors import EncodingLengthError, TokenizerError

PAD, UNK, CLS, SEP, MASK = 0, 1, 2, 3, 4
SPECIAL_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")
IGNORE = -1
CONT = "##"

FORMAT_VERSION = 1


def _strip(sym: str) -> str:
    return sym[len(CONT) :] if sym.startswith(CONT) else sym


def _pair_key(pair):
    # tie-break on surface form first so ("l", "##o") precedes ("##o", "##w")
    a, b = pair
    return (_strip(a), _strip(b), a, b)


def _split_word(word: str) -> list[str]:
    return [word[0]] + [CONT + c for c in word[1:]]


def _words_of(texts) -> Counter:
    counts = Counter()
    for text in texts:
        for w in unicodedata.normalize("NFC", text).split():
            counts[w] += 1
    return counts


class Tokenizer:
    def __init__(self, alphabet, merges, vocab: dict[str, int]):
        self.alphabet: tuple[str, ...] = tuple(sorted(alphabet))
        self.merges: tuple[tuple[str, str], ...] = tuple(tuple(m) for m in merges)
        self.vocab: dict[str, int] = dict(vocab)
        self.id_to_token: list[str] = [None] * len(self.vocab)
        for tok, i in self.vocab.items():
            if not 0 <= i < len(self.vocab) or self.id_to_token[i] is not None:
                raise TokenizerError("vocab ids must be dense and unique")
            self.id_to_token[i] = tok
        for i, name in enumerate(SPECIAL_TOKENS):
            if self.vocab.get(name) != i:
                raise TokenizerError(f"special token {name} must have id {i}")
        for a, b in self.merges:
            if a + _strip(b) not in self.vocab:
                raise TokenizerError(f"merge result {a + _strip(b)!r} missing from vocab")
        self._alphabet_set = frozenset(self.alphabet)
        self._ranks = {m: r for r, m in enumerate(self.merges)}
        self._cache: dict[str, tuple[int, ...]] = {}

    @property
    def specials(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(SPECIAL_TOKENS)}

    def __len__(self):
        return len(self.vocab)

    def __eq__(self, other):
        return (
            isinstance(other, Tokenizer)
            and self.alphabet == other.alphabet
            and self.merges == other.merges
            and self.vocab == other.vocab
        )

    # serialization

    def to_json(self) -> str:
        data = {
            "version": FORMAT_VERSION,
            "alphabet": list(self.alphabet),
            "merges": [list(m) for m in self.merges],
            "vocab": {tok: i for i, tok in enumerate(self.id_to_token)},
            "specials": {name: i for i, name in enumerate(SPECIAL_TOKENS)},
        }
        return json.dumps(data, ensure_ascii=False, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Tokenizer":
        try:
            data = json.loads(text)
            if data.get("version", FORMAT_VERSION) != FORMAT_VERSION:
                raise TokenizerError(f"unsupported tokenizer version {data['version']}")
            specials = data["specials"]
            if specials != {name: i for i, name in enumerate(SPECIAL_TOKENS)}:
                raise TokenizerError("unexpected special-token layout")
            return cls(data["alphabet"], data["merges"], data["vocab"])
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, TokenizerError):
                raise
            raise TokenizerError(f"malformed tokenizer file: {e}") from None

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Tokenizer":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except FileNotFoundError:
            raise TokenizerError(f"tokenizer file not found: {path}") from None
        return cls.from_json(text)

    def sha256(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()

    # encoding

    def encode_word(self, word: str) -> list[int]:
        word = unicodedata.normalize("NFC", word)
        cached = self._cache.get(word)
        if cached is not None:
            return list(cached)
        symbols = _split_word(word)
        while len(symbols) > 1:
            best, best_rank = None, None
            for i in range(len(symbols) - 1):
                r = self._ranks.get((symbols[i], symbols[i + 1]))
                if r is not None and (best_rank is None or r < best_rank):
                    best, best_rank = i, r
            if best is None:
                break
            a, b = symbols[best], symbols[best + 1]
            symbols[best : best + 2] = [a + _strip(b)]
        ids = tuple(self.vocab.get(s, UNK) for s in symbols)
        self._cache[word] = ids
        return list(ids)

    def decode_word(self, ids: Sequence[int]) -> str:
        return "".join(_strip(self.id_to_token[i]) for i in ids)

    def tokens(self, ids: Sequence[int]) -> list[str]:
        return [self.id_to_token[i] for i in ids]


def train_bpe(texts, vocab_size: int = 2000, min_frequency: int = 2) -> Tokenizer:
    """Learn merges by repeatedly joining the most frequent adjacent pair.

    Stops at ``vocab_size`` entries or when no pair occurs ``min_frequency``
    times. Frequency ties go to the lexicographically smallest pair, compared
    on surface form (without ``##``).
    """
    counts = _words_of(texts)
    if not counts:
        raise TokenizerError("cannot train a tokenizer on an empty text stream")
    words = {w: _split_word(w) for w in counts}
    alphabet = sorted({s for syms in words.values() for s in syms})
    base = len(SPECIAL_TOKENS) + len(alphabet)
    if vocab_size < base:
        raise TokenizerError(
            f"vocab_size {vocab_size} smaller than alphabet ({len(alphabet)}) + specials"
        )
    vocab = {name: i for i, name in enumerate(SPECIAL_TOKENS)}
    for s in alphabet:
        vocab[s] = len(vocab)

    pair_counts: Counter = Counter()
    where: dict[tuple[str, str], set[str]] = {}
    for w, syms in words.items():
        for p in zip(syms, syms[1:]):
            pair_counts[p] += counts[w]
            where.setdefault(p, set()).add(w)

    merges = []
    while len(vocab) < vocab_size and pair_counts:
        top = max(pair_counts.values())
        if top < min_frequency:
            break
        pair = min((p for p, c in pair_counts.items() if c == top), key=_pair_key)
        merged = pair[0] + _strip(pair[1])
        merges.append(pair)
        if merged not in vocab:
            vocab[merged] = len(vocab)
        for w in sorted(where.pop(pair, ())):
            syms = words[w]
            c = counts[w]
            for p in zip(syms, syms[1:]):
                pair_counts[p] -= c
                if pair_counts[p] <= 0:
                    del pair_counts[p]
            new = []
            i = 0
            while i < len(syms):
                if i < len(syms) - 1 and (syms[i], syms[i + 1]) == pair:
                    new.append(merged)
                    i += 2
                else:
                    new.append(syms[i])
                    i += 1
            words[w] = new
            for p in zip(new, new[1:]):
                pair_counts[p] += c
                where.setdefault(p, set()).add(w)
        pair_counts.pop(pair, None)
    return Tokenizer(alphabet, merges, vocab)


@dataclass(frozen=True)
class Encoding:
    ids: tuple[int, ...]
    attention_mask: tuple[int, ...]
    word_starts: tuple[int, ...]
    label_ids: tuple[int, ...] | None = None
    n_words: int = 0
    """Number of words that survived truncation."""

    def __len__(self):
        return len(self.ids)

    @property
    def n_real(self) -> int:
        return sum(self.attention_mask)


def encode_sentence(
    tok: Tokenizer,
    sentence: TaggedSentence | Sequence[str],
    tagset: TagSet | None = None,
    max_len: int = 128,
    mode: str = "truncate",
) -> Encoding:
    """Lay out ``[CLS] subwords... [SEP] [PAD]...`` padded to ``max_len``.

    In ``truncate`` mode whole words are dropped from the end until the
    sequence fits; ``strict`` raises EncodingLengthError instead.
    """
    if max_len < 3:
        raise ValueError(f"max_len must be >= 3, got {max_len}")
    if mode not in ("strict", "truncate"):
        raise ValueError(f"unknown mode {mode!r}")
    if isinstance(sentence, TaggedSentence):
        words, tags = sentence.words, sentence.tags
    else:
        words, tags = tuple(sentence), None
    if tagset is not None and tags is None:
        raise ValueError("tagset given but sentence has no tags")

    pieces = [tok.encode_word(w) for w in words]
    budget = max_len - 2
    total = sum(len(p) for p in pieces)
    if total > budget:
        if mode == "strict":
            preview = " ".join(words[:8]) + (" ..." if len(words) > 8 else "")
            raise EncodingLengthError(
                f"sentence needs {total + 2} positions > max_len {max_len}: {preview!r}"
            )
        while pieces and total > budget:
            total -= len(pieces.pop())

    ids = [CLS]
    word_starts = []
    labels = [IGNORE] if tagset is not None else None
    for i, p in enumerate(pieces):
        word_starts.append(len(ids))
        ids.extend(p)
        if labels is not None:
            labels.append(tagset.id_of(tags[i]))
            labels.extend([IGNORE] * (len(p) - 1))
    ids.append(SEP)
    n_real = len(ids)
    pad = max_len - n_real
    ids.extend([PAD] * pad)
    if labels is not None:
        labels.append(IGNORE)
        labels.extend([IGNORE] * pad)
    return Encoding(
        ids=tuple(ids),
        attention_mask=tuple([1] * n_real + [0] * pad),
        word_starts=tuple(word_starts),
        label_ids=None if labels is None else tuple(labels),
        n_words=len(pieces),
    )
