"""Experiment harnesses shared by ``scripts/`` and the acceptance tests."""

from __future__ import annotations

from dataclasses import dataclass, replace

from skeltag.augment import WindowSpec, augment_corpus
from skeltag.corpus import Corpus, split, tagset_of
from skeltag.metrics import EvalReport, evaluate, majority_baseline
from skeltag.model import ModelConfig, ModelParams, init_model
from skeltag.tokenizer import Tokenizer, train_bpe
from skeltag.train import MlmConfig, TrainConfig, TrainHistory, pretrain_mlm, train_token_classifier


@dataclass
class RunResult:
    name: str
    params: ModelParams
    history: TrainHistory
    report: EvalReport


@dataclass
class SplitSetup:
    train: Corpus
    val: Corpus
    augmented: Corpus
    tokenizer: Tokenizer
    config: ModelConfig

    @property
    def tagset(self):
        return tagset_of(Corpus(self.train.sentences + self.val.sentences))


def prepare(
    corpus: Corpus,
    val_ratio: float = 0.2,
    seed: int = 7,
    window: WindowSpec = WindowSpec(dedup=True),
    vocab_size: int = 2000,
    min_frequency: int = 2,
    **model_kw,
) -> SplitSetup:
    """Split, augment the training side only, and fit a tokenizer on it."""
    train, val = split(corpus, val_ratio, seed)
    tok = train_bpe([" ".join(s.words) for s in train], vocab_size, min_frequency)
    tagset = tagset_of(corpus)
    config = ModelConfig(vocab_size=len(tok), n_tags=len(tagset), seed=seed, **model_kw).validate()
    return SplitSetup(train, val, augment_corpus(train, window), tok, config)


def baseline_comparison(setup: SplitSetup, train_cfg: TrainConfig = TrainConfig(seed=7)):
    """Train from scratch; return (model result, majority-class baseline report)."""
    tagset = setup.tagset
    params, history = train_token_classifier(
        init_model(setup.config), setup.augmented, setup.val, setup.tokenizer, tagset, train_cfg
    )
    report = evaluate(params, setup.tokenizer, tagset, setup.val)
    return RunResult("scratch", params, history, report), majority_baseline(setup.train, setup.val, tagset)


def compare_transfer(
    setup: SplitSetup,
    train_cfg: TrainConfig = TrainConfig(seed=7),
    mlm_cfg: MlmConfig = MlmConfig(seed=7),
    pretrain_epochs: int = 30,
    extra_texts=(),
) -> list[RunResult]:
    """Fine-tune from random init and from an MLM-pretrained encoder."""
    tagset = setup.tagset
    texts = [" ".join(s.words) for s in setup.train] + list(extra_texts)
    scratch_params, scratch_hist = train_token_classifier(
        init_model(setup.config), setup.augmented, setup.val, setup.tokenizer, tagset, train_cfg
    )
    pre, _ = pretrain_mlm(
        setup.config, texts, setup.tokenizer, mlm_cfg, replace(train_cfg, epochs=pretrain_epochs)
    )
    tuned_params, tuned_hist = train_token_classifier(
        pre, setup.augmented, setup.val, setup.tokenizer, tagset, train_cfg
    )
    return [
        RunResult("scratch", scratch_params, scratch_hist, evaluate(scratch_params, setup.tokenizer, tagset, setup.val)),
        RunResult("mlm+finetune", tuned_params, tuned_hist, evaluate(tuned_params, setup.tokenizer, tagset, setup.val)),
    ]


def format_comparison(results: list[RunResult]) -> str:
    lines = [f"{'run':<14} {'best_epoch':>10} {'val_f1':>8} {'val_acc':>8}"]
    for r in results:
        lines.append(f"{r.name:<14} {r.history.best_epoch:>10} {r.report.weighted_f1:8.4f} {r.report.accuracy:8.4f}")
    return "\n".join(lines)
