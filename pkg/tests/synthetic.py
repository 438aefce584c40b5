"""Frozen tables and synthetic corpora shared by the unit and acceptance tests."""

from __future__ import annotations

import random

from scrs.engine.conflict import conflict_check
from scrs.engine.verdict import FinalStatus, decide
from scrs.inspector.snapshots import SnapshotRepository, capture_snapshot

# admissibility table: phase -> fields that phase may carry
TABLE = {
    "FeatureExtraction": {"signature", "definition", "parameters", "return_type", "parent_contract",
                          "overridden_function", "related_calls"},
    "Stage1": {"signature", "security", "definition", "parameters", "return_type", "parent_contract",
               "overridden_function"},
    "Stage2": {"signature", "security", "related_calls"},
    "Stage3": {"signature", "security", "definition"},
    "Stage4": {"signature", "security", "parameters", "return_type", "related_calls"},
}


def synthetic_counting(candidates: int, conflicts: int, seed: int = 0) -> list[FinalStatus]:
    """Flagged candidates with snapshot trails; exactly ``conflicts`` of them drift between phases."""
    rng = random.Random(seed)
    conflicted = set(rng.sample(range(candidates), conflicts))
    repo = SnapshotRepository()
    statuses = []
    for i in range(candidates):
        sig = f"C{i}-f-{rng.randint(0, 4)}-uint256"
        ids = [capture_snapshot("FeatureExtraction", {"signature": sig, "parameters": sig.split("-")[2]}, repo)]
        ids.append(capture_snapshot("Stage1", {"signature": sig, "security": "vulnerable"}, repo))
        if i in conflicted:
            if rng.random() < 0.5:
                ids.append(capture_snapshot("Stage3", {"signature": sig.replace("-f-", "-g-")}, repo))
            else:
                ids.append(capture_snapshot("Stage2", {"signature": sig, "security": "safe"}, repo))
        else:
            ids.append(capture_snapshot("Stage3", {"signature": sig, "security": "vulnerable"}, repo))
        statuses.append(decide(True, conflict_check(ids, repo)))
    return statuses
