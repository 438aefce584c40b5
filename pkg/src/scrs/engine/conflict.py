"""Cross-phase consistency check over captured snapshots."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable

from scrs.inspector.snapshots import FIELDS, Phase, Snapshot, SnapshotRepository

# threat texts that only make sense for functions with parameters / return values
PARAMETER_THREAT = re.compile(r"\bparam(eter)?s?\b|\bargument", re.I)
RETURN_THREAT = re.compile(r"return[- ]?values?\b|returned values?\b|return data\b|unchecked return", re.I)


class Consistency(str, enum.Enum):
    CONSISTENT = "Consistent"
    CONFLICT = "Conflict"


@dataclass(frozen=True)
class FieldConflict:
    field: str
    phase_a: str
    value_a: str
    phase_b: str
    value_b: str

    def to_dict(self) -> dict:
        return {"field": self.field, "phase_a": self.phase_a, "value_a": self.value_a,
                "phase_b": self.phase_b, "value_b": self.value_b}


@dataclass(frozen=True)
class ConsistencyVerdict:
    status: Consistency
    conflicting_fields: tuple[FieldConflict, ...] = field(default=())

    def __post_init__(self):
        if (self.status is Consistency.CONFLICT) != bool(self.conflicting_fields):
            raise ValueError("status must be Conflict exactly when conflicts are listed")

    @property
    def consistent(self) -> bool:
        return self.status is Consistency.CONSISTENT

    def to_dict(self) -> dict:
        return {"status": self.status.value, "conflicting_fields": [c.to_dict() for c in self.conflicting_fields]}


def _show(value) -> str:
    if isinstance(value, frozenset):
        return "{" + ", ".join(sorted(value)) + "}"
    return str(value)


def field_conflicts(snapshots: list[Snapshot]) -> list[FieldConflict]:
    """Every snapshot value that disagrees with the first one recorded for its field."""
    out = []
    for name in FIELDS:
        first = None
        for snap in snapshots:
            if name not in snap.fields:
                continue
            value = snap.fields[name]
            if first is None:
                first = (snap, value)
            elif value != first[1]:
                out.append(FieldConflict(name, first[0].phase.value, _show(first[1]), snap.phase.value, _show(value)))
    return out


def cross_field_conflicts(snapshots: list[Snapshot]) -> list[FieldConflict]:
    """Threats that presuppose parameters or a return value the function does not have."""
    base = next((s for s in snapshots if s.phase is Phase.FEATURE_EXTRACTION), None)
    if base is None:
        return []
    out = []
    no_params = base.fields.get("parameters") == "0"
    void = base.fields.get("return_type") == "void"
    for snap in snapshots:
        for threat in snap.threats:
            if no_params and PARAMETER_THREAT.search(threat):
                out.append(FieldConflict("parameters", base.phase.value, "0", snap.phase.value, threat))
            if void and RETURN_THREAT.search(threat):
                out.append(FieldConflict("return_type", base.phase.value, "void", snap.phase.value, threat))
    return out


def conflict_check(snapshot_ids: Iterable[str], repository: SnapshotRepository) -> ConsistencyVerdict:
    snaps = [repository.get(sid) for sid in snapshot_ids]
    conflicts = field_conflicts(snaps) + cross_field_conflicts(snaps)
    if conflicts:
        return ConsistencyVerdict(Consistency.CONFLICT, tuple(conflicts))
    return ConsistencyVerdict(Consistency.CONSISTENT)
