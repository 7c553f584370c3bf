"""Shared fixtures: the standard synthetic corpus and helpers built on it."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vulnprompt.corpus import dump_jsonl
from vulnprompt.embedding import HashedBagOfTokensBackend
from vulnprompt.runner import build_index_from_corpus
from vulnprompt.synthetic import make_synthetic_corpus

STANDARD_SEED = 7
STANDARD_N_PER_LABEL = 25


@pytest.fixture(scope="session")
def synthetic_corpus():
    return make_synthetic_corpus(seed=STANDARD_SEED, n_per_label=STANDARD_N_PER_LABEL)


@pytest.fixture(scope="session")
def synthetic_corpus_path(synthetic_corpus, tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus") / "synthetic.jsonl"
    dump_jsonl(synthetic_corpus, path)
    return path


@pytest.fixture(scope="session")
def hashed_backend():
    return HashedBagOfTokensBackend(dimension=256)


@pytest.fixture(scope="session")
def synthetic_index(synthetic_corpus, hashed_backend):
    return build_index_from_corpus(synthetic_corpus, hashed_backend, include_labels=True)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one line per acceptance criterion after the test run."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, description, status, elapsed in sorted(RESULTS):
        terminalreporter.write_line(
            f"[{status}] criterion {number}: {description} ({elapsed:.2f}s)"
        )
