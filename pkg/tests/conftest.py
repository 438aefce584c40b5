from __future__ import annotations

import functools
from pathlib import Path

import pytest

from scrs.features.bundle import extract_features

FIXTURES = Path(__file__).parent / "fixtures"
CONTRACTS = FIXTURES / "contracts"
SNIPPETS = FIXTURES / "snippets"
SCRS = FIXTURES / "scrs"
REPLAY = FIXTURES / "replay"
KB_FILE = FIXTURES / "kb.jsonl"


@functools.lru_cache(maxsize=None)
def features_of(path: str):
    return extract_features(path)


@pytest.fixture(autouse=True)
def _no_compiler(monkeypatch):
    # tests read committed AST caches; never shell out to a compiler by accident
    monkeypatch.setenv("SCRS_SOLC", "/nonexistent/solc")
