"""Similarity gate, snapshot conflict filter, verdicts and sensitivity sweep."""

from scrs.engine.conflict import Consistency, ConsistencyVerdict, FieldConflict, conflict_check
from scrs.engine.similarity import (
    CheckerParams,
    SimilarityScores,
    control_similarity,
    cosine,
    is_flagged,
    logical_similarity,
    numeric_similarity,
    similarity_check,
)
from scrs.engine.sweep import LabeledScore, SweepGrid, SweepReport, load_fixture_set, sensitivity_sweep
from scrs.engine.verdict import FinalStatus, ViolationVerdict, finalize_verdicts

__all__ = [
    "CheckerParams",
    "Consistency",
    "ConsistencyVerdict",
    "FieldConflict",
    "FinalStatus",
    "LabeledScore",
    "SimilarityScores",
    "SweepGrid",
    "SweepReport",
    "ViolationVerdict",
    "conflict_check",
    "control_similarity",
    "cosine",
    "finalize_verdicts",
    "is_flagged",
    "load_fixture_set",
    "logical_similarity",
    "numeric_similarity",
    "sensitivity_sweep",
    "similarity_check",
]
