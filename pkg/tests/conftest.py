import time

import pytest

from skeltag.corpus import Corpus, sample_corpus, tagset_of
from skeltag.model import init_model
from skeltag.tokenizer import train_bpe
from skeltag.train import TrainConfig, default_model_config, train_token_classifier

_criteria = {}


@pytest.fixture(scope="session")
def sample():
    return sample_corpus()


@pytest.fixture(scope="session")
def sample_tagset(sample):
    return tagset_of(sample)


@pytest.fixture(scope="session")
def sample_tokenizer(sample):
    return train_bpe([" ".join(s.words) for s in sample], 2000, 2)


@pytest.fixture(scope="session")
def overfit(sample):
    """Default tiny model trained 200 epochs on the first 10 bundled sentences."""
    ten = Corpus(sample.sentences[:10], "sample[:10]")
    tagset = tagset_of(sample)
    tok = train_bpe([" ".join(s.words) for s in ten], 2000, 2)
    config = default_model_config(tok, tagset, seed=7)
    t0 = time.perf_counter()
    params, history = train_token_classifier(
        init_model(config), ten, ten, tok, tagset, TrainConfig(epochs=200, seed=7)
    )
    return {
        "params": params,
        "history": history,
        "tokenizer": tok,
        "tagset": tagset,
        "corpus": ten,
        "seconds": time.perf_counter() - t0,
    }


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    info = dict(report.user_properties).get("criterion")
    if info:
        _criteria[report.nodeid] = (info, report.outcome)


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.user_properties.append(("criterion", (m.args[0], m.args[1])))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for (number, text), outcome in sorted(_criteria.values(), key=lambda x: x[0][0]):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number:>2}: {text}")
