from pathlib import Path

import pytest

from stubforge.corpus import CorpusEntry, load_corpus

CORPUS_ROOT = Path(__file__).resolve().parent.parent / "corpus"


@pytest.fixture(scope="session")
def corpus_root() -> Path:
    return CORPUS_ROOT


@pytest.fixture(scope="session")
def entries(corpus_root) -> dict[str, CorpusEntry]:
    return {e.entry_id: e for e in load_corpus(corpus_root)}


@pytest.fixture(scope="session")
def l1(entries) -> CorpusEntry:
    return entries["L1"]


@pytest.fixture(scope="session")
def t1(entries) -> CorpusEntry:
    return entries["T1"]


@pytest.fixture(scope="session")
def s36(entries) -> CorpusEntry:
    return entries["S36"]


@pytest.fixture(scope="session")
def m3(entries) -> CorpusEntry:
    return entries["M3"]


@pytest.fixture(scope="session")
def w1(entries) -> CorpusEntry:
    return entries["W1"]


@pytest.fixture(scope="session")
def d1(entries) -> CorpusEntry:
    return entries["D1"]
