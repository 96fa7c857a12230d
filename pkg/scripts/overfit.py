"""Sanity check: a few sentences, many epochs, training F1 should reach 1.0."""

import argparse
import time

from skeltag.corpus import Corpus, sample_corpus, tagset_of
from skeltag.metrics import evaluate
from skeltag.model import init_model
from skeltag.tokenizer import train_bpe
from skeltag.train import TrainConfig, default_model_config, train_token_classifier


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sentences", type=int, default=10)
    ap.add_argument("--epochs", type=int, default=200)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    corpus = Corpus(sample_corpus().sentences[: args.sentences])
    tagset = tagset_of(sample_corpus())
    tok = train_bpe([" ".join(s.words) for s in corpus])
    params = init_model(default_model_config(tok, tagset, seed=args.seed))
    t0 = time.perf_counter()
    params, hist = train_token_classifier(
        params, corpus, corpus, tok, tagset, TrainConfig(epochs=args.epochs, seed=args.seed)
    )
    report = evaluate(params, tok, tagset, corpus)
    print(f"{time.perf_counter() - t0:.1f} s, best epoch {hist.best_epoch}, train weighted F1 {report.weighted_f1:.4f}")


if __name__ == "__main__":
    main()
