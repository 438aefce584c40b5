"""Knowledge-base record types and their JSON-lines persistence."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from scrs.errors import IoFailure, SchemaMismatch
from scrs.features.compress import CompositeSignature, LogicalSequence, StructuralEmbedding
from scrs.io import atomic_write_text

RECORD_VERSION = 1


class ConstraintClass(str, enum.Enum):
    RANGE = "Range"
    RELATION = "Relation"
    NON_TRIVIAL = "NonTrivial"


@dataclass(frozen=True)
class ParamConstraint:
    index: int
    constraint: str
    cls: ConstraintClass

    def to_dict(self) -> dict:
        return {"index": self.index, "constraint": self.constraint, "class": self.cls.value}


@dataclass(frozen=True)
class ReturnCheck:
    index: int
    check: str

    def to_dict(self) -> dict:
        return {"index": self.index, "check": self.check}


@dataclass(frozen=True)
class UsageKnowledge:
    param_constraints: tuple[ParamConstraint, ...] = ()
    return_checks: tuple[ReturnCheck, ...] = ()
    override_obligations: tuple[str, ...] = ()
    free_text_rationale: str = ""
    diagnostics: tuple[str, ...] = ()

    @property
    def empty(self) -> bool:
        return not (self.param_constraints or self.return_checks or self.override_obligations)

    def to_dict(self) -> dict:
        return {
            "param_constraints": [c.to_dict() for c in self.param_constraints],
            "return_checks": [c.to_dict() for c in self.return_checks],
            "override_obligations": list(self.override_obligations),
            "rationale": self.free_text_rationale,
            "diagnostics": list(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "UsageKnowledge":
        return cls(
            tuple(ParamConstraint(int(c["index"]), c["constraint"], ConstraintClass(c["class"]))
                  for c in d.get("param_constraints", [])),
            tuple(ReturnCheck(int(c["index"]), c["check"]) for c in d.get("return_checks", [])),
            tuple(d.get("override_obligations", [])),
            d.get("rationale", ""),
            tuple(d.get("diagnostics", [])),
        )

    def render(self) -> str:
        lines = []
        for c in self.param_constraints:
            lines.append(f"- parameter {c.index} [{c.cls.value}]: {c.constraint}")
        for c in self.return_checks:
            lines.append(f"- return value {c.index}: {c.check}")
        for o in self.override_obligations:
            lines.append(f"- inheritors: {o}")
        return "\n".join(lines) if lines else "- no recorded usage rules"


@dataclass(frozen=True)
class ScrRecord:
    id: str
    signature: CompositeSignature
    sequence: LogicalSequence
    embedding: StructuralEmbedding
    knowledge: UsageKnowledge
    provenance: str
    definition: str = ""

    def to_dict(self) -> dict:
        return {
            "version": RECORD_VERSION,
            "id": self.id,
            "signature": self.signature.render(),
            "sequence": self.sequence.to_list(),
            "embedding": self.embedding.to_dict(),
            "knowledge": self.knowledge.to_dict(),
            "provenance": self.provenance,
            "definition": self.definition,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScrRecord":
        if d.get("version") != RECORD_VERSION:
            raise SchemaMismatch(f"unknown record version {d.get('version')!r}")
        return cls(
            id=d["id"],
            signature=CompositeSignature.parse(d["signature"]),
            sequence=LogicalSequence.from_list(d["sequence"]),
            embedding=StructuralEmbedding.from_dict(d["embedding"]),
            knowledge=UsageKnowledge.from_dict(d["knowledge"]),
            provenance=d["provenance"],
            definition=d.get("definition", ""),
        )

    def render(self) -> str:
        return "\n".join([
            f"signature: {self.signature.render()}",
            f"declaration: {self.definition or '(unknown)'}",
            "guards inside the component:",
            self.sequence.render(),
            "usage rules:",
            self.knowledge.render(),
        ])


@dataclass
class KnowledgeBase:
    records: list[ScrRecord] = field(default_factory=list)

    def __iter__(self) -> Iterator[ScrRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def get(self, record_id: str) -> ScrRecord | None:
        return next((r for r in self.records if r.id == record_id), None)


def store_kb(records, path: str | Path) -> None:
    lines = [json.dumps(r.to_dict(), sort_keys=True, ensure_ascii=False) for r in records]
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def load_kb(path: str | Path) -> KnowledgeBase:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read knowledge base {path}: {exc}") from exc
    records = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            records.append(ScrRecord.from_dict(json.loads(line)))
        except SchemaMismatch as exc:
            raise SchemaMismatch(f"{path}: line {n}: {exc}") from exc
        except (ValueError, KeyError, TypeError, AttributeError) as exc:
            raise SchemaMismatch(f"{path}: line {n}: malformed record: {exc}") from exc
    return KnowledgeBase(records)
