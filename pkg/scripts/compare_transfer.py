"""Fine-tune from scratch vs. from an MLM-pretrained encoder on one split.

    python scripts/compare_transfer.py --epochs 10 --pretrain-epochs 30
"""

import argparse
from dataclasses import replace

from skeltag.corpus import read_corpus, sample_corpus
from skeltag.experiments import compare_transfer, format_comparison, prepare
from skeltag.train import MlmConfig, TrainConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--corpus", default=None, help="CoNLL file; the bundled sample when omitted")
    ap.add_argument("--val-ratio", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--epochs", type=int, default=TrainConfig().epochs)
    ap.add_argument("--pretrain-epochs", type=int, default=30)
    ap.add_argument("--extra-text", default=None, help="raw text for pretraining, one sentence per line")
    args = ap.parse_args()

    corpus = read_corpus(args.corpus) if args.corpus else sample_corpus()
    setup = prepare(corpus, val_ratio=args.val_ratio, seed=args.seed)
    extra = []
    if args.extra_text:
        with open(args.extra_text, encoding="utf-8") as fh:
            extra = [line.strip() for line in fh if line.strip()]
    runs = compare_transfer(
        setup,
        replace(TrainConfig(), epochs=args.epochs, seed=args.seed),
        MlmConfig(seed=args.seed),
        pretrain_epochs=args.pretrain_epochs,
        extra_texts=extra,
    )
    print(f"train {len(setup.train)} sentences ({len(setup.augmented)} fragments), val {len(setup.val)}")
    print(format_comparison(runs))


if __name__ == "__main__":
    main()
