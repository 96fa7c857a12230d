import json

import pytest

from skeltag.augment import expected_count
from skeltag.cli import build_parser, main
from skeltag.corpus import read_corpus, sample_path

FAST = ["--epochs", "1", "--d-model", "16", "--n-heads", "2", "--n-layers", "1", "--d-ff", "32"]


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    out = d / "model.sktg"
    rc = main(["train", "--corpus", str(sample_path()), "--val-ratio", "0.2", "--seed", "7", "--out", str(out), *FAST])
    assert rc == 0
    return out


def test_train_outputs(trained):
    d = trained.parent
    assert trained.exists()
    for suffix in (".tokenizer.json", ".history.jsonl", ".report.json"):
        assert (d / ("model" + suffix)).exists()
    lines = (d / "model.history.jsonl").read_text().splitlines()
    assert len(lines) == 1
    rec = json.loads(lines[0])
    assert {"epoch", "train_loss", "val_weighted_f1", "val_accuracy", "wall_time"} <= set(rec)


def test_eval_missing_corpus(trained, capsys):
    assert main(["eval", "--model", str(trained), "--corpus", "missing.conll"]) == 2
    assert "missing.conll" in capsys.readouterr().err


def test_eval_prints_table(trained, capsys, tmp_path):
    report = tmp_path / "r.json"
    assert main(["eval", "--model", str(trained), "--corpus", str(sample_path()), "--report", str(report)]) == 0
    out = capsys.readouterr().out
    assert "weighted F1" in out and "NOUN" in out
    assert json.loads(report.read_text())["total_words"] == read_corpus(sample_path()).n_words


def test_augment_count(tmp_path, capsys):
    out = tmp_path / "aug.conll"
    assert main(["augment", "--corpus", str(sample_path()), "--out", str(out)]) == 0
    src = read_corpus(sample_path())
    assert len(read_corpus(out)) == expected_count(len(s) for s in src)


def test_augment_bad_window(tmp_path):
    assert main(["augment", "--corpus", str(sample_path()), "--out", str(tmp_path / "x"), "--window-min", "3", "--window-max", "2"]) == 1


def test_usage_errors(capsys):
    assert main(["bogus"]) == 1
    assert main([]) == 1
    assert main(["train", "--corpus", "x"]) == 1


def test_bad_corpus_exit_2(tmp_path):
    bad = tmp_path / "bad.conll"
    bad.write_text("no_tag_here\n", encoding="utf-8")
    assert main(["tokenizer-train", "--corpus", str(bad), "--out", str(tmp_path / "t.json")]) == 2


def test_model_error_exit_3(tmp_path):
    rc = main(["train", "--corpus", str(sample_path()), "--out", str(tmp_path / "m.sktg"), "--d-model", "10", "--n-heads", "3"])
    assert rc == 3


def test_tag_and_skeleton(trained, tmp_path, capsys):
    text = tmp_path / "in.txt"
    text.write_text("Мама мыла раму .\n\nКошка спит\n", encoding="utf-8")
    assert main(["tag", "--model", str(trained), str(text)]) == 0
    tagged = capsys.readouterr().out
    assert len(tagged.strip().split("\n\n")) == 2
    out = tmp_path / "sk.txt"
    assert main(["skeleton", "--model", str(trained), "--keep-lexical", "PUNCT,VERB", str(text), "--out", str(out)]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert [len(l.split()) for l in lines] == [4, 2]


def test_skeleton_stdin(trained, monkeypatch, capsys):
    import io

    monkeypatch.setattr("sys.stdin", io.StringIO("Мама мыла раму\n"))
    assert main(["skeleton", "--model", str(trained)]) == 0
    assert len(capsys.readouterr().out.split()) == 3


def test_skeleton_empty_input(trained, monkeypatch):
    import io

    monkeypatch.setattr("sys.stdin", io.StringIO(""))
    assert main(["skeleton", "--model", str(trained)]) == 2


def test_inspect(trained, capsys):
    assert main(["inspect", "--model", str(trained)]) == 0
    meta = json.loads(capsys.readouterr().out)
    assert meta["config"]["d_model"] == 16
    assert meta["tensors"][0]["name"] == "embed.token"


def test_tokenizer_mismatch(trained, tmp_path):
    other = tmp_path / "t.json"
    assert main(["tokenizer-train", "--corpus", str(sample_path()), "--out", str(other), "--vocab-size", "200"]) == 0
    assert main(["eval", "--model", str(trained), "--corpus", str(sample_path()), "--tokenizer", str(other)]) == 2


def test_pretrain_then_train(tmp_path):
    pre = tmp_path / "pre.sktg"
    assert main(["pretrain", "--corpus", str(sample_path()), "--out", str(pre), "--seed", "3", *FAST]) == 0
    assert (tmp_path / "pre.history.jsonl").exists()
    out = tmp_path / "ft.sktg"
    assert main(["train", "--corpus", str(sample_path()), "--model", str(pre), "--out", str(out), "--epochs", "1"]) == 0
    # pretrained-only model has no tag set
    assert main(["eval", "--model", str(pre), "--corpus", str(sample_path())]) == 2


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"epochs": 2, "lr": 0.01, "seed": 5}))
    ns = build_parser().parse_args(["train", "--corpus", "x", "--out", "y"])
    assert ns.epochs == 10
    from skeltag.cli import parse_args

    ns = parse_args(["train", "--corpus", "x", "--out", "y", "--config", str(cfg), "--epochs", "4"])
    assert (ns.epochs, ns.lr, ns.seed) == (4, 0.01, 5)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"no_such_flag": 1}))
    assert main(["train", "--corpus", "x", "--out", "y", "--config", str(bad)]) == 1


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["train", "--help"])
    out = capsys.readouterr().out
    for flag in ("--corpus", "--val-corpus", "--val-ratio", "--seed", "--epochs", "--batch-size", "--lr",
                 "--vocab-size", "--max-len", "--window-min", "--window-max", "--dedup", "--model", "--out",
                 "--report", "--config", "--strict-len"):
        assert flag in out
    assert "(default: 0.0003)" in out and "(default: 32)" in out
