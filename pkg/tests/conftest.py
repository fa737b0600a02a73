import pytest
import torch

from narfix.labeling import label_records
from narfix.narmodel.config import ModelConfig
from narfix.toylang import CorpusConfig, Vocabulary, generate

torch.set_num_threads(1)


def pytest_terminal_summary(terminalreporter):
    from acceptance_support import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])

PAPER_BUGGY = ["if", "(", "result", "!=", "null", ")"]
PAPER_FIXED = ["if", "(", "!", "result", ".", "isNotype", "(", ")", ")"]


@pytest.fixture(scope="session")
def small_corpus():
    return [r.to_json() for r in generate(CorpusConfig(n=60), seed=11)]


@pytest.fixture(scope="session")
def labeled_small(small_corpus):
    return label_records(small_corpus)


@pytest.fixture(scope="session")
def small_vocab(labeled_small):
    return Vocabulary.build(s for r in labeled_small for s in (r["buggy"], r["fixed"]))


@pytest.fixture
def tiny_cfg():
    return ModelConfig(d_model=16, n_enc=2, n_dec=2, k_split=1, n_heads=2, d_ff=32, l_max=6,
                       max_len=128, p_max=64, dropout=0.0)
