"""Cross-entropy, Adam, masked-token pretraining and the fine-tuning loop."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from skeltag.corpus import Corpus, TagSet
from skeltag.errors import DataError, ModelError, NumericError
from skeltag.metrics import evaluate
from skeltag.model import Batch, ModelConfig, ModelParams, backward, collate, forward, init_model
from skeltag.tokenizer import IGNORE, MASK, SPECIAL_TOKENS, Encoding, Tokenizer, encode_sentence

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    learning_rate: float = 3e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    grad_clip_norm: float | None = 1.0
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ModelError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ModelError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.learning_rate > 0:
            raise ModelError(f"learning_rate must be positive, got {self.learning_rate}")
        for b in (self.adam_beta1, self.adam_beta2):
            if not 0.0 <= b < 1.0:
                raise ModelError(f"Adam betas must be in [0, 1), got {b}")


@dataclass(frozen=True)
class MlmConfig:
    mask_probability: float = 0.15
    replace_mask_fraction: float = 0.8
    replace_random_fraction: float = 0.1
    keep_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        total = self.replace_mask_fraction + self.replace_random_fraction + self.keep_fraction
        if abs(total - 1.0) > 1e-9:
            raise ModelError(f"masking fractions must sum to 1, got {total}")
        if not 0.0 <= self.mask_probability <= 1.0:
            raise ModelError(f"mask_probability must be in [0, 1], got {self.mask_probability}")


@dataclass
class OptimizerState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "OptimizerState":
        return cls(
            {k: np.zeros_like(p) for k, p in params.tensors.items()},
            {k: np.zeros_like(p) for k, p in params.tensors.items()},
        )


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_weighted_f1: float | None = None
    val_accuracy: float | None = None
    wall_time: float = 0.0

    def deterministic_part(self) -> tuple:
        return (self.epoch, self.train_loss, self.val_weighted_f1, self.val_accuracy)


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int | None = None

    def __len__(self):
        return len(self.records)

    def to_jsonl(self, include_time: bool = True) -> str:
        lines = []
        for r in self.records:
            d = asdict(r)
            if not include_time:
                d.pop("wall_time")
            lines.append(json.dumps(d, sort_keys=True))
        return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------- loss


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood over positions whose label is not IGNORE.

    Returns the loss and its gradient with respect to ``logits``.
    """
    logits = np.asarray(logits)
    labels = np.asarray(labels)
    if logits.shape[:-1] != labels.shape:
        raise ModelError(f"logits {logits.shape} and labels {labels.shape} disagree")
    flat = logits.reshape(-1, logits.shape[-1])
    lab = labels.reshape(-1)
    sel = np.flatnonzero(lab != IGNORE)
    if sel.size == 0:
        raise DataError("no supervised positions: every label is IGNORE")
    gold = lab[sel]
    if gold.min() < 0 or gold.max() >= flat.shape[-1]:
        raise ModelError("label id out of range")
    rows = flat[sel]
    z = rows - rows.max(axis=-1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=-1))
    nll = logsumexp - z[np.arange(sel.size), gold]
    loss = float(nll.mean(dtype=np.float64))
    probs = np.exp(z - logsumexp[:, None])
    probs[np.arange(sel.size), gold] -= 1.0
    grad = np.zeros_like(flat)
    grad[sel] = probs / flat.dtype.type(sel.size)
    return loss, grad.reshape(logits.shape)


def compute_gradients(params: ModelParams, batch, labels=None, mode: str = "eval", rng=None, head: str = "tag"):
    """Loss and exact gradients of ``cross_entropy(forward(params, batch))``."""
    b = batch if isinstance(batch, Batch) else collate(batch)
    if labels is None:
        labels = b.labels
    if labels is None:
        raise DataError("batch carries no labels")
    logits, cache = forward(params, b, mode=mode, rng=rng, head=head, return_cache=True)
    loss, dlogits = cross_entropy(logits, labels)
    return loss, backward(params, cache, dlogits)


# ---------------------------------------------------------------- optimizer


def global_norm(grads: dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads.values())))


def adam_step(params: ModelParams, grads: dict[str, np.ndarray], state: OptimizerState, cfg: TrainConfig):
    """One Adam update, in place, after global-norm clipping. Returns ``(params, state)``."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            bad = int(np.size(g) - np.count_nonzero(np.isfinite(g)))
            raise NumericError(f"non-finite gradient in {name}: {bad} of {np.size(g)} entries")
    scale = 1.0
    if cfg.grad_clip_norm:
        norm = global_norm(grads)
        if norm > cfg.grad_clip_norm:
            scale = cfg.grad_clip_norm / norm
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    state.t += 1
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for name, p in params.tensors.items():
        g = grads[name]
        if scale != 1.0:
            g = g * p.dtype.type(scale)
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.adam_epsilon)
    return params, state


# ---------------------------------------------------------------- masked-token pretraining


def mask_tokens(enc: Encoding, cfg: MlmConfig, tok: Tokenizer, rng: np.random.Generator | None = None):
    """Select real, non-special positions with ``cfg.mask_probability``; of the
    selected, replace with MASK / a random token / keep as configured.

    Returns the corrupted encoding and per-position targets (original id at
    selected positions, IGNORE elsewhere).
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    ids = np.array(enc.ids, dtype=np.int64)
    mask = np.array(enc.attention_mask, dtype=np.int64)
    n_special = len(SPECIAL_TOKENS)
    candidates = (mask == 1) & (ids >= n_special)
    chosen = candidates & (rng.random(ids.shape) < cfg.mask_probability)
    action = rng.random(ids.shape)
    random_ids = rng.integers(n_special, max(len(tok), n_special + 1), size=ids.shape)
    targets = np.where(chosen, ids, IGNORE)
    to_mask = chosen & (action < cfg.replace_mask_fraction)
    to_random = chosen & ~to_mask & (action < cfg.replace_mask_fraction + cfg.replace_random_fraction)
    new_ids = ids.copy()
    new_ids[to_mask] = MASK
    if len(tok) > n_special:
        new_ids[to_random] = random_ids[to_random]
    masked = Encoding(
        ids=tuple(new_ids.tolist()),
        attention_mask=enc.attention_mask,
        word_starts=enc.word_starts,
        label_ids=None,
        n_words=enc.n_words,
    )
    return masked, tuple(targets.tolist())


def _text_words(texts) -> list[list[str]]:
    out = []
    for t in texts:
        words = t.split() if isinstance(t, str) else list(t)
        if words:
            out.append(words)
    return out


def pretrain_mlm(
    config: ModelConfig,
    texts,
    tok: Tokenizer,
    mlm_cfg: MlmConfig = MlmConfig(),
    train_cfg: TrainConfig = TrainConfig(),
    init: ModelParams | None = None,
    on_epoch: Callable[[int, float], None] | None = None,
) -> tuple[ModelParams, list[float]]:
    """Train encoder + MLM head on masked-token prediction.

    Returns the params and the mean loss of each epoch.
    """
    sentences = _text_words(texts)
    if not sentences:
        raise DataError("pretraining needs at least one non-empty text")
    if config.vocab_size != len(tok):
        raise ModelError(f"config vocab_size {config.vocab_size} != tokenizer size {len(tok)}")
    params = init.copy() if init is not None else init_model(config)
    encs = [encode_sentence(tok, words, max_len=config.max_len) for words in sentences]
    state = OptimizerState.zeros_like(params)
    rng = np.random.default_rng(train_cfg.seed)
    mask_rng = np.random.default_rng(mlm_cfg.seed)
    losses = []
    for epoch in range(1, train_cfg.epochs + 1):
        order = rng.permutation(len(encs)) if train_cfg.shuffle else np.arange(len(encs))
        batch_losses = []
        for lo in range(0, len(order), train_cfg.batch_size):
            chunk = [encs[i] for i in order[lo : lo + train_cfg.batch_size]]
            masked, targets = zip(*(mask_tokens(e, mlm_cfg, tok, mask_rng) for e in chunk))
            b = collate(masked, trim=True)
            t = np.array(targets, dtype=np.int64)[:, : b.ids.shape[1]]
            if not np.any(t != IGNORE):
                continue
            loss, grads = compute_gradients(params, b, t, mode="train", rng=rng, head="mlm")
            adam_step(params, grads, state, train_cfg)
            batch_losses.append(loss)
        mean = float(np.mean(batch_losses)) if batch_losses else float("nan")
        losses.append(mean)
        log.info("mlm epoch %d loss %.4f", epoch, mean)
        if on_epoch is not None:
            on_epoch(epoch, mean)
    return params, losses


# ---------------------------------------------------------------- fine-tuning


def encode_corpus(tok: Tokenizer, corpus: Corpus, tagset: TagSet, max_len: int, mode: str = "truncate") -> list[Encoding]:
    encs = []
    for s in corpus.sentences:
        enc = encode_sentence(tok, s, tagset, max_len=max_len, mode=mode)
        if enc.n_words:
            encs.append(enc)
    return encs


def _check_tags(corpus: Corpus, tagset: TagSet, what: str) -> None:
    unknown = sorted({t for s in corpus.sentences for t in s.tags if t not in tagset})
    if unknown:
        raise DataError(f"{what} corpus has tags outside the tag set: {unknown}")


def train_token_classifier(
    init: ModelParams,
    train: Corpus,
    val: Corpus,
    tok: Tokenizer,
    tagset: TagSet,
    cfg: TrainConfig = TrainConfig(),
    encode_mode: str = "truncate",
    on_epoch: Callable[[EpochRecord], None] | None = None,
) -> tuple[ModelParams, TrainHistory]:
    """Supervised fine-tuning with per-epoch validation.

    Returns the params from the epoch with the best validation weighted F1
    (earliest epoch on ties) and the full history.
    """
    if not len(train):
        raise DataError("empty training corpus")
    _check_tags(train, tagset, "training")
    _check_tags(val, tagset, "validation")
    if init.config.n_tags != len(tagset):
        raise ModelError(f"model has {init.config.n_tags} tags, tag set has {len(tagset)}")
    max_len = init.config.max_len
    encs = encode_corpus(tok, train, tagset, max_len, encode_mode)
    if not encs:
        raise DataError("no training sentence survived encoding")

    params = init.copy()
    state = OptimizerState.zeros_like(params)
    rng = np.random.default_rng(cfg.seed)
    history = TrainHistory()
    best, best_f1 = params.copy(), -1.0
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(len(encs)) if cfg.shuffle else np.arange(len(encs))
        batch_losses = []
        for lo in range(0, len(order), cfg.batch_size):
            b = collate([encs[i] for i in order[lo : lo + cfg.batch_size]], trim=True)
            loss, grads = compute_gradients(params, b, mode="train", rng=rng)
            adam_step(params, grads, state, cfg)
            batch_losses.append(loss)
        record = EpochRecord(epoch, float(np.mean(batch_losses)))
        if len(val):
            report = evaluate(params, tok, tagset, val, max_len)
            record.val_weighted_f1 = report.weighted_f1
            record.val_accuracy = report.accuracy
            score = report.weighted_f1
        else:
            score = -record.train_loss
        if history.best_epoch is None or score > best_f1:
            best, best_f1, history.best_epoch = params.copy(), score, epoch
        record.wall_time = time.perf_counter() - t0
        history.records.append(record)
        log.info(
            "epoch %d loss %.4f val_f1 %s val_acc %s",
            epoch,
            record.train_loss,
            record.val_weighted_f1,
            record.val_accuracy,
        )
        if on_epoch is not None:
            on_epoch(record)
    return best, history


def default_model_config(tok: Tokenizer, tagset: TagSet, **overrides) -> ModelConfig:
    return ModelConfig(vocab_size=len(tok), n_tags=len(tagset), **overrides).validate()
