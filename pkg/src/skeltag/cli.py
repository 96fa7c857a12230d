"""Command-line entry point: ``skeltag <subcommand> [flags]``.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 model/numeric error.
Flag values resolve as command line > ``--config`` JSON file > built-in default.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from skeltag.augment import WindowSpec, augment_corpus
from skeltag.corpus import Corpus, read_corpus, save_corpus, split, tagset_of
from skeltag.errors import DataError, ModelError, ModelFormatError, SkeltagError
from skeltag.metrics import evaluate
from skeltag.model import ModelConfig, init_model, load_model, predict_tags, read_metadata, save_model, with_fresh_head
from skeltag.skeleton import SkeletonConfig, skeletonize_text
from skeltag.tokenizer import Tokenizer, train_bpe
from skeltag.train import MlmConfig, TrainConfig, TrainHistory, EpochRecord, pretrain_mlm, train_token_classifier

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_MODEL = 0, 1, 2, 3

_MODEL_DEFAULTS = ModelConfig(vocab_size=1, n_tags=1)
_TRAIN_DEFAULTS = TrainConfig()
_MLM_DEFAULTS = MlmConfig()


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _tags(value: str) -> list[str]:
    return [t for t in value.split(",") if t]


def _add_model_flags(p):
    g = p.add_argument_group("model")
    g.add_argument("--max-len", type=int, default=_MODEL_DEFAULTS.max_len, help="max encoded length")
    g.add_argument("--d-model", type=int, default=_MODEL_DEFAULTS.d_model)
    g.add_argument("--n-heads", type=int, default=_MODEL_DEFAULTS.n_heads)
    g.add_argument("--n-layers", type=int, default=_MODEL_DEFAULTS.n_layers)
    g.add_argument("--d-ff", type=int, default=_MODEL_DEFAULTS.d_ff)
    g.add_argument("--dropout", type=float, default=_MODEL_DEFAULTS.dropout_rate)


def _add_train_flags(p):
    g = p.add_argument_group("optimization")
    g.add_argument("--epochs", type=int, default=_TRAIN_DEFAULTS.epochs)
    g.add_argument("--batch-size", type=int, default=_TRAIN_DEFAULTS.batch_size)
    g.add_argument("--lr", type=float, default=_TRAIN_DEFAULTS.learning_rate)
    g.add_argument("--adam-beta1", type=float, default=_TRAIN_DEFAULTS.adam_beta1)
    g.add_argument("--adam-beta2", type=float, default=_TRAIN_DEFAULTS.adam_beta2)
    g.add_argument("--adam-epsilon", type=float, default=_TRAIN_DEFAULTS.adam_epsilon)
    g.add_argument("--grad-clip-norm", type=float, default=_TRAIN_DEFAULTS.grad_clip_norm, help="0 disables clipping")
    g.add_argument("--shuffle", action=argparse.BooleanOptionalAction, default=_TRAIN_DEFAULTS.shuffle)
    g.add_argument("--seed", type=int, default=_TRAIN_DEFAULTS.seed)


def _add_tokenizer_flags(p):
    p.add_argument("--tokenizer", default=None, help="tokenizer JSON; None trains one, or uses <model>.tokenizer.json with --model")
    p.add_argument("--vocab-size", type=int, default=2000)
    p.add_argument("--min-frequency", type=int, default=2)


def _add_window_flags(p, dedup_default: bool):
    p.add_argument("--window-min", type=int, default=1)
    p.add_argument("--window-max", type=int, default=None, help="None means sentence length")
    p.add_argument("--dedup", action=argparse.BooleanOptionalAction, default=dedup_default)


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="skeltag", description="POS tagging and skeletal structure extraction", formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="subcommand", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("tokenizer-train", help="train a BPE tokenizer on a corpus", formatter_class=fmt)
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab-size", type=int, default=2000)
    p.add_argument("--min-frequency", type=int, default=2)
    p.add_argument("--out", required=True)

    p = sub.add_parser("augment", help="sliding-window augmentation", formatter_class=fmt)
    p.add_argument("--corpus", required=True)
    _add_window_flags(p, dedup_default=False)
    p.add_argument("--out", required=True)

    p = sub.add_parser("pretrain", help="masked-token pretraining", formatter_class=fmt)
    p.add_argument("--corpus", required=True, help="tagged corpus; tags are ignored")
    p.add_argument("--text", default=None, help="extra raw text, one sentence per line")
    _add_tokenizer_flags(p)
    _add_model_flags(p)
    _add_train_flags(p)
    p.add_argument("--mask-prob", type=float, default=_MLM_DEFAULTS.mask_probability)
    p.add_argument("--out", required=True)
    p.add_argument("--history", default=None, help="None means <out>.history.jsonl")

    p = sub.add_parser("train", help="fine-tune a token classifier", formatter_class=fmt)
    p.add_argument("--corpus", required=True)
    p.add_argument("--val-corpus", default=None)
    p.add_argument("--val-ratio", type=float, default=0.2)
    p.add_argument("--model", default=None, help="initial (e.g. pretrained) model; model flags are then ignored")
    _add_tokenizer_flags(p)
    _add_model_flags(p)
    _add_train_flags(p)
    p.add_argument("--augment", action=argparse.BooleanOptionalAction, default=True, help="window the training split")
    _add_window_flags(p, dedup_default=True)
    p.add_argument("--strict-len", action="store_true", help="fail on over-long sentences instead of truncating")
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None, help="None means <out>.report.json")
    p.add_argument("--history", default=None, help="None means <out>.history.jsonl")

    p = sub.add_parser("eval", help="evaluate a model on a tagged corpus", formatter_class=fmt)
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--tokenizer", default=None)
    p.add_argument("--max-len", type=int, default=None, help="None means the model's max_len")
    p.add_argument("--report", default=None)

    p = sub.add_parser("tag", help="tag raw text (one sentence per line)", formatter_class=fmt)
    p.add_argument("--model", required=True)
    p.add_argument("--tokenizer", default=None)
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("input", nargs="?", default="-", help="text file or - for stdin")
    p.add_argument("--out", default=None, help="None means stdout")

    p = sub.add_parser("skeleton", help="extract skeletal POS structures", formatter_class=fmt)
    p.add_argument("--model", required=True)
    p.add_argument("--tokenizer", default=None)
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--keep-lexical", type=_tags, default=[], metavar="TAG,TAG")
    p.add_argument("--separator", default=" ")
    p.add_argument("input", nargs="?", default="-", help="text file or - for stdin")
    p.add_argument("--out", default=None, help="None means stdout")

    p = sub.add_parser("inspect", help="print a model file's metadata", formatter_class=fmt)
    p.add_argument("--model", required=True)

    for sp in sub.choices.values():
        sp.add_argument("--config", default=None, help="JSON file of flag defaults (keys are flag names)")
        for action in sp._actions:
            # the defaults formatter skips flags without help text
            if not action.help and action.option_strings:
                action.help = "(default: %(default)s)"
    return parser


# ---------------------------------------------------------------- helpers


def _sidecar(model_path, suffix: str) -> Path:
    p = Path(model_path)
    return p.with_name(p.stem + suffix)


def _load_tokenizer_for(model_path, explicit, expected_sha):
    path = Path(explicit) if explicit else _sidecar(model_path, ".tokenizer.json")
    tok = Tokenizer.load(path)
    if expected_sha and tok.sha256() != expected_sha:
        raise ModelFormatError(f"tokenizer {path} does not match the one the model was trained with")
    return tok


def _load(args):
    loaded = load_model(args.model)
    tok = _load_tokenizer_for(args.model, args.tokenizer, loaded.tokenizer_sha256)
    if loaded.tagset is None:
        raise ModelFormatError(f"{args.model} has no tag set (pretrained-only model?)")
    return loaded, tok


def _read_text(src: str) -> str:
    if src == "-":
        return sys.stdin.read()
    try:
        return Path(src).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"input file not found: {src}") from None


def _write_text(dest, text: str) -> None:
    if dest is None:
        sys.stdout.write(text)
    else:
        Path(dest).write_text(text, encoding="utf-8")


def _train_cfg(args) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        adam_beta1=args.adam_beta1,
        adam_beta2=args.adam_beta2,
        adam_epsilon=args.adam_epsilon,
        grad_clip_norm=args.grad_clip_norm or None,
        seed=args.seed,
        shuffle=args.shuffle,
    )


def _model_kw(args) -> dict:
    return dict(
        max_len=args.max_len,
        d_model=args.d_model,
        n_heads=args.n_heads,
        n_layers=args.n_layers,
        d_ff=args.d_ff,
        dropout_rate=args.dropout,
        seed=args.seed,
    )


def _window(args) -> WindowSpec:
    try:
        return WindowSpec(args.window_min, args.window_max, args.dedup)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _epoch_line(r: EpochRecord) -> None:
    f1 = "-" if r.val_weighted_f1 is None else f"{r.val_weighted_f1:.4f}"
    acc = "-" if r.val_accuracy is None else f"{r.val_accuracy:.4f}"
    print(f"epoch {r.epoch:3d}  loss {r.train_loss:.4f}  val_f1 {f1}  val_acc {acc}", file=sys.stderr)


# ---------------------------------------------------------------- subcommands


def cmd_tokenizer_train(args) -> int:
    corpus = read_corpus(args.corpus)
    tok = train_bpe([" ".join(s.words) for s in corpus], args.vocab_size, args.min_frequency)
    tok.save(args.out)
    print(f"tokenizer: {len(tok)} tokens, {len(tok.merges)} merges -> {args.out}")
    return EXIT_OK


def cmd_augment(args) -> int:
    spec = _window(args)
    corpus = read_corpus(args.corpus)
    aug = augment_corpus(corpus, spec)
    if not len(aug):
        Path(args.out).write_text("", encoding="utf-8")
    else:
        save_corpus(aug, args.out)
    print(f"augment: {len(corpus)} sentences -> {len(aug)} fragments -> {args.out}")
    return EXIT_OK


def cmd_pretrain(args) -> int:
    corpus = read_corpus(args.corpus)
    texts = [" ".join(s.words) for s in corpus]
    if args.text:
        texts += [line for line in _read_text(args.text).splitlines() if line.strip()]
    tok = Tokenizer.load(args.tokenizer) if args.tokenizer else train_bpe(texts, args.vocab_size, args.min_frequency)
    tagset = tagset_of(corpus)
    config = ModelConfig(vocab_size=len(tok), n_tags=len(tagset), **_model_kw(args)).validate()
    mlm_cfg = MlmConfig(mask_probability=args.mask_prob, seed=args.seed)

    def report(epoch, loss):
        print(f"mlm epoch {epoch:3d}  loss {loss:.4f}", file=sys.stderr)

    params, losses = pretrain_mlm(config, texts, tok, mlm_cfg, _train_cfg(args), on_epoch=report)
    tok.save(_sidecar(args.out, ".tokenizer.json"))
    save_model(args.out, params, None, tok, extra={"stage": "mlm", "mlm_losses": losses})
    hist = TrainHistory([EpochRecord(i + 1, loss) for i, loss in enumerate(losses)])
    Path(args.history or _sidecar(args.out, ".history.jsonl")).write_text(hist.to_jsonl(include_time=False))
    print(f"pretrain: {len(texts)} texts, final mlm loss {losses[-1]:.4f} -> {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    corpus = read_corpus(args.corpus)
    if args.val_corpus:
        train, val = corpus, read_corpus(args.val_corpus)
    else:
        try:
            train, val = split(corpus, args.val_ratio, args.seed)
        except DataError as e:
            if not 0.0 < args.val_ratio < 1.0:
                raise UsageError(str(e)) from None
            raise
    tagset = tagset_of(Corpus(train.sentences + val.sentences))
    cfg = _train_cfg(args)

    if args.model:
        loaded = load_model(args.model)
        tok = _load_tokenizer_for(args.model, args.tokenizer, loaded.tokenizer_sha256)
        init = loaded.params
        if loaded.tagset != tagset:
            init = with_fresh_head(init, len(tagset), seed=args.seed)
    else:
        tok = Tokenizer.load(args.tokenizer) if args.tokenizer else train_bpe(
            [" ".join(s.words) for s in train], args.vocab_size, args.min_frequency
        )
        init = init_model(ModelConfig(vocab_size=len(tok), n_tags=len(tagset), **_model_kw(args)).validate())

    train_data = augment_corpus(train, _window(args)) if args.augment else train
    params, history = train_token_classifier(
        init, train_data, val, tok, tagset, cfg,
        encode_mode="strict" if args.strict_len else "truncate",
        on_epoch=_epoch_line,
    )
    report = evaluate(params, tok, tagset, val)

    tok.save(_sidecar(args.out, ".tokenizer.json"))
    extra = {"stage": "token-classification", "best_epoch": history.best_epoch, "train_config": asdict(cfg)}
    save_model(args.out, params, tagset, tok, extra=extra)
    Path(args.report or _sidecar(args.out, ".report.json")).write_text(report.to_json(), encoding="utf-8")
    Path(args.history or _sidecar(args.out, ".history.jsonl")).write_text(history.to_jsonl(), encoding="utf-8")
    print(
        f"train: {len(train_data)} examples, best epoch {history.best_epoch}, "
        f"val weighted F1 {report.weighted_f1:.4f}, accuracy {report.accuracy:.4f} -> {args.out}"
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    corpus = read_corpus(args.corpus)
    loaded, tok = _load(args)
    report = evaluate(loaded.params, tok, loaded.tagset, corpus, args.max_len)
    print(report.format_table())
    if args.report:
        Path(args.report).write_text(report.to_json(), encoding="utf-8")
    print(f"eval: {report.total_words} words, weighted F1 {report.weighted_f1:.4f}, accuracy {report.accuracy:.4f}")
    return EXIT_OK


def cmd_tag(args) -> int:
    text = _read_text(args.input)
    loaded, tok = _load(args)
    out = []
    for line in text.splitlines():
        words = line.split()
        if not words:
            continue
        tagged = predict_tags(loaded.params, tok, loaded.tagset, words, args.max_len)
        out.extend(f"{w}\t{t}\n" for w, t in zip(tagged.words, tagged.tags))
        out.append("\n")
    if not out:
        raise DataError("no text to tag")
    _write_text(args.out, "".join(out))
    return EXIT_OK


def cmd_skeleton(args) -> int:
    text = _read_text(args.input)
    loaded, tok = _load(args)
    cfg = SkeletonConfig(frozenset(args.keep_lexical), args.separator)
    lines = skeletonize_text(loaded.params, tok, loaded.tagset, text, cfg, args.max_len)
    _write_text(args.out, "".join(line + "\n" for line in lines))
    return EXIT_OK


def cmd_inspect(args) -> int:
    meta = read_metadata(args.model)
    print(json.dumps(meta, ensure_ascii=False, indent=2))
    return EXIT_OK


COMMANDS = {
    "tokenizer-train": cmd_tokenizer_train,
    "augment": cmd_augment,
    "pretrain": cmd_pretrain,
    "train": cmd_train,
    "eval": cmd_eval,
    "tag": cmd_tag,
    "skeleton": cmd_skeleton,
    "inspect": cmd_inspect,
}


def _config_defaults(argv) -> dict:
    pre = _Parser(add_help=False)
    pre.add_argument("--config", default=None)
    ns, _ = pre.parse_known_args(argv)
    if not ns.config:
        return {}
    try:
        data = json.loads(Path(ns.config).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"config file not found: {ns.config}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"config file {ns.config}: {e}") from None
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def parse_args(argv):
    parser = build_parser()
    defaults = _config_defaults(argv)
    if defaults:
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        known = set()
        for sp in subparsers.choices.values():
            dests = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in defaults.items() if k in dests})
            known |= dests
        unknown = sorted(set(defaults) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {unknown}")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError, UnicodeDecodeError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (ModelError, FloatingPointError) as e:
        print(f"model error: {e}", file=sys.stderr)
        return EXIT_MODEL
    except SkeltagError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
