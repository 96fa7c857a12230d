"""Train on the augmented split and compare with the majority-class baseline."""

import argparse

from skeltag.augment import WindowSpec
from skeltag.corpus import read_corpus, sample_corpus
from skeltag.experiments import baseline_comparison, prepare
from skeltag.train import TrainConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--corpus", default=None, help="CoNLL file; the bundled sample when omitted")
    ap.add_argument("--val-ratio", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--epochs", type=int, default=TrainConfig().epochs)
    ap.add_argument("--no-dedup", action="store_true", help="keep duplicate fragments")
    args = ap.parse_args()

    corpus = read_corpus(args.corpus) if args.corpus else sample_corpus()
    setup = prepare(corpus, val_ratio=args.val_ratio, seed=args.seed, window=WindowSpec(dedup=not args.no_dedup))
    run, base = baseline_comparison(setup, TrainConfig(epochs=args.epochs, seed=args.seed))
    print(run.report.format_table())
    print()
    print(f"best epoch         {run.history.best_epoch}")
    print(f"model weighted F1  {run.report.weighted_f1:.4f}")
    print(f"majority baseline  {base.weighted_f1:.4f}")


if __name__ == "__main__":
    main()
