"""Staged usage inspection and snapshot capture."""

from scrs.inspector.agent import Diagnostic, Finding, run_comprehensive, run_targeted, usage_tag
from scrs.inspector.snapshots import ALLOWED, FIELDS, Phase, Snapshot, SnapshotRepository, capture_snapshot
from scrs.inspector.stages import Stage, StageOutput, Verdict, parse_stage_response

__all__ = [
    "ALLOWED",
    "FIELDS",
    "Diagnostic",
    "Finding",
    "Phase",
    "Snapshot",
    "SnapshotRepository",
    "Stage",
    "StageOutput",
    "Verdict",
    "capture_snapshot",
    "parse_stage_response",
    "run_comprehensive",
    "run_targeted",
    "usage_tag",
]
