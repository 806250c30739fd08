"""Shared fixtures: generated corpora are built once per session."""

from __future__ import annotations

import pytest

from gen_fixtures import build_corpus, build_throughput_corpus
from gen_toyrepo import build_toy_repo


@pytest.fixture(scope="session", autouse=True)
def _native_library_ready():
    """Pay the one-time grammar compile before any timed test runs."""
    import astchunk

    astchunk.parse(astchunk.SourceDocument.from_text("x = 1\n", astchunk.PYTHON))


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    build_corpus(root)
    return root


@pytest.fixture(scope="session")
def throughput_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("throughput")
    build_throughput_corpus(root)
    return root


@pytest.fixture(scope="session")
def toy_repo(tmp_path_factory):
    root = tmp_path_factory.mktemp("toyrepo")
    return build_toy_repo(root)
