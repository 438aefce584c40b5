"""Final decision per finding: similarity gate plus snapshot consistency."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from scrs.engine.conflict import ConsistencyVerdict, conflict_check
from scrs.engine.similarity import CheckerParams, SimilarityScores, similarity_check
from scrs.inspector.agent import Finding
from scrs.inspector.snapshots import Phase, SnapshotRepository, capture_snapshot
from scrs.retrieval import DEFAULT_WEIGHTS, RetrievalHit, retrieve_reference


class FinalStatus(str, enum.Enum):
    VIOLATION = "Violation"
    DISCARDED_CONFLICT = "Discarded-Conflict"
    REJECTED_SIMILAR = "Rejected-Similar"


@dataclass(frozen=True)
class ViolationVerdict:
    finding: Finding
    scores: SimilarityScores
    flagged: bool
    conflict: ConsistencyVerdict
    final: FinalStatus
    reference: RetrievalHit
    snapshots: tuple[str, ...] = ()

    def __post_init__(self):
        if self.final is FinalStatus.VIOLATION and not (self.flagged and self.conflict.consistent):
            raise ValueError("a violation must be flagged and consistent")


def decide(flagged: bool, conflict: ConsistencyVerdict) -> FinalStatus:
    if not conflict.consistent:
        return FinalStatus.DISCARDED_CONFLICT
    if flagged:
        return FinalStatus.VIOLATION
    return FinalStatus.REJECTED_SIMILAR


def intake_payload(finding: Finding) -> dict:
    sig = finding.usage.signature
    return {
        "signature": sig.render(),
        "security": "vulnerable",
        "parameters": sig.param_count,
        "return_type": sig.return_type,
        "related_calls": list(finding.usage.related_calls),
    }


def finalize_verdicts(findings: list[Finding], kb, weights=DEFAULT_WEIGHTS, params: CheckerParams | None = None,
                      repository: SnapshotRepository | None = None) -> list[ViolationVerdict]:
    params = params or CheckerParams()
    repository = repository if repository is not None else SnapshotRepository()
    out = []
    for finding in findings:
        hit = retrieve_reference(finding.usage.signature, kb, weights)
        scores, flagged = similarity_check(finding, hit.record, params)
        subject = repository.get(finding.snapshots[0]).subject if finding.snapshots else ""
        intake = capture_snapshot(Phase.STAGE4, intake_payload(finding), repository, subject)
        ids = tuple(finding.snapshots) + (intake,)
        conflict = conflict_check(ids, repository)
        out.append(ViolationVerdict(finding, scores, flagged, conflict, decide(flagged, conflict), hit, ids))
    return out
