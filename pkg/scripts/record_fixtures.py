"""Regenerate the replay stores and the committed knowledge base.

Responses come from the hand-authored stage tables in
tests/fixtures/stage_tables.  The script plays them through a scripted
backend wrapped in a recorder, so the stores hold exactly the requests the
current prompts produce.  Rerun it after changing any prompt template.

    python3 scripts/record_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from scrs.engine.similarity import CheckerParams
from scrs.features.bundle import extract_features
from scrs.kb.agent import build_records
from scrs.kb.records import KnowledgeBase, store_kb
from scrs.kb.sources import ingest_sources
from scrs.llm import CompletionRequest, RecordingBackend, ScriptedBackend
from scrs.pipeline import analyze_all
from scrs.retrieval import DEFAULT_WEIGHTS

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"
CONTRACTS = ["swap_zero_min", "swap_guarded", "capped_bypass", "capped_guarded"]


def _text(response) -> str:
    return response if isinstance(response, str) else json.dumps(response, sort_keys=True)


def kb_responder(table: dict):
    def respond(req: CompletionRequest) -> str:
        if req.stage_tag in table["responses"]:
            return _text(table["responses"][req.stage_tag])
        template_id = req.stage_tag.split("/")[1]
        return _text(table["defaults"][template_id])
    return respond


def analyze_responder(table: dict):
    def respond(req: CompletionRequest) -> str:
        if req.stage_tag not in table["responses"]:
            raise KeyError(f"no authored response for {req.stage_tag}")
        return _text(table["responses"][req.stage_tag])
    return respond


def main() -> int:
    tables = FIXTURES / "stage_tables"
    replay = FIXTURES / "replay"
    replay.mkdir(exist_ok=True)

    kb_backend = RecordingBackend(ScriptedBackend(kb_responder(json.loads((tables / "kb.json").read_text()))))
    records = build_records(ingest_sources(FIXTURES / "scrs"), kb_backend, max_workers=1)
    kb_backend.store(replay / "kb.json").save()
    store_kb(records, FIXTURES / "kb.jsonl")
    print(f"kb: {len(records)} records, {len(kb_backend.recorded)} responses")

    an_backend = RecordingBackend(ScriptedBackend(analyze_responder(json.loads((tables / "analyze.json").read_text()))))
    features = [extract_features(FIXTURES / "contracts" / f"{name}.sol") for name in CONTRACTS]
    analyze_all(features, KnowledgeBase(records), DEFAULT_WEIGHTS, CheckerParams(), an_backend, workers=1)
    an_backend.store(replay / "analyze.json").save()
    print(f"analyze: {len(an_backend.recorded)} responses")
    return 0


if __name__ == "__main__":
    sys.exit(main())
