"""Per-phase snapshots of inferred facts about one component usage.

Each analysis phase may only record a fixed subset of the eight fields;
the repository refuses anything else so that conflict checking compares
like with like.  Values are normalized on capture.
"""

from __future__ import annotations

import enum
import json
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from scrs.errors import FieldNotAllowed, IoFailure, SchemaMismatch, UnknownSnapshotId
from scrs.io import atomic_write_text

FIELDS = (
    "signature",
    "security",
    "definition",
    "parameters",
    "return_type",
    "parent_contract",
    "overridden_function",
    "related_calls",
)


class Phase(str, enum.Enum):
    FEATURE_EXTRACTION = "FeatureExtraction"
    STAGE1 = "Stage1"
    STAGE2 = "Stage2"
    STAGE3 = "Stage3"
    STAGE4 = "Stage4"


ALLOWED: dict[Phase, frozenset[str]] = {
    Phase.FEATURE_EXTRACTION: frozenset(FIELDS) - {"security"},
    Phase.STAGE1: frozenset(FIELDS) - {"related_calls"},
    Phase.STAGE2: frozenset({"signature", "security", "related_calls"}),
    Phase.STAGE3: frozenset({"signature", "security", "definition"}),
    Phase.STAGE4: frozenset({"signature", "security", "parameters", "return_type", "related_calls"}),
}

_WS = re.compile(r"\s+")


def normalize_text(value: Any) -> str:
    return _WS.sub(" ", str(value)).strip().casefold()


def normalize_value(key: str, value: Any):
    if key == "related_calls":
        if isinstance(value, str):
            value = [v for v in re.split(r"[,;\n]", value) if v.strip()]
        return frozenset(normalize_text(v) for v in value)
    if key == "parameters":
        if isinstance(value, (list, tuple)):
            return str(len(value))
        return normalize_text(value)
    return normalize_text(value)


@dataclass(frozen=True)
class Snapshot:
    id: str
    phase: Phase
    fields: dict = field(hash=False)
    # usage the snapshot belongs to, and threat texts reported at this phase
    subject: str = ""
    threats: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        out = {k: (sorted(v) if isinstance(v, frozenset) else v) for k, v in sorted(self.fields.items())}
        return {"id": self.id, "phase": self.phase.value, "subject": self.subject,
                "fields": out, "threats": list(self.threats)}

    @classmethod
    def from_dict(cls, d: dict) -> "Snapshot":
        phase = Phase(d["phase"])
        fields = {k: normalize_value(k, v) for k, v in d.get("fields", {}).items()}
        return cls(d["id"], phase, fields, d.get("subject", ""), tuple(d.get("threats", ())))


class SnapshotRepository:
    """Append-only, thread-safe store; ids encode the append order."""

    def __init__(self, prefix: str = "snap"):
        self._prefix = prefix
        self._items: list[Snapshot] = []
        self._index: dict[str, Snapshot] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(list(self._items))

    def append(self, phase: Phase, fields: dict, subject: str = "", threats: Iterable[str] = ()) -> str:
        with self._lock:
            sid = f"{self._prefix}-{len(self._items) + 1:06d}"
            snap = Snapshot(sid, phase, fields, subject, tuple(normalize_text(t) for t in threats))
            self._items.append(snap)
            self._index[sid] = snap
            return sid

    def get(self, sid: str) -> Snapshot:
        try:
            return self._index[sid]
        except KeyError:
            raise UnknownSnapshotId(f"no snapshot with id {sid!r}") from None

    def to_jsonl(self) -> str:
        return "".join(json.dumps(s.to_dict(), sort_keys=True) + "\n" for s in self._items)

    def save(self, path: str | Path) -> None:
        atomic_write_text(path, self.to_jsonl())

    @classmethod
    def load(cls, path: str | Path, prefix: str = "snap") -> "SnapshotRepository":
        repo = cls(prefix)
        try:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise IoFailure(f"cannot read snapshots {path}: {exc}") from exc
        for n, line in enumerate(lines, 1):
            if not line.strip():
                continue
            try:
                snap = Snapshot.from_dict(json.loads(line))
            except (ValueError, KeyError) as exc:
                raise SchemaMismatch(f"{path}:{n}: bad snapshot: {exc}") from exc
            repo._items.append(snap)
            repo._index[snap.id] = snap
        return repo


def capture_snapshot(phase: Phase | str, payload: dict, repository: SnapshotRepository,
                     subject: str = "", threats: Iterable[str] = ()) -> str:
    """Normalize and append one snapshot; reject fields the phase may not carry."""
    phase = Phase(phase)
    extra = sorted(set(payload) - ALLOWED[phase])
    if extra:
        raise FieldNotAllowed(f"{phase.value} snapshots may not carry {', '.join(extra)}")
    fields = {k: normalize_value(k, v) for k, v in payload.items() if v is not None}
    return repository.append(phase, fields, subject, threats)
