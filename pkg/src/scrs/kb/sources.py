"""Local-directory ingestion of component source files."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from pathlib import Path

from scrs.errors import NoSources, ScrsError
from scrs.features.compiler import compile_file
from scrs.features.graph import CompositeGraph, build_composite_graph
from scrs.features.model import ContractModel, load_contract_ast

logger = logging.getLogger(__name__)


class Origin(str, enum.Enum):
    FREQUENCY_TOP = "FrequencyTop"
    INCIDENT_DERIVED = "IncidentDerived"
    LOCAL = "Local"


def origin_of(relpath: Path) -> Origin:
    """Top-level directory names pick the origin; anything else is local."""
    head = relpath.parts[0].lower() if len(relpath.parts) > 1 else ""
    if head.startswith(("frequency", "top")):
        return Origin.FREQUENCY_TOP
    if head.startswith("incident"):
        return Origin.INCIDENT_DERIVED
    return Origin.LOCAL


@dataclass
class ScrSourceUnit:
    id: str
    origin: Origin
    source_text: str
    compiled_model: ContractModel = field(repr=False)
    path: Path | None = None
    graph: CompositeGraph = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.source_text:
            raise ValueError(f"source unit {self.id} has no source text")
        self.graph = build_composite_graph(self.compiled_model)


@dataclass(frozen=True)
class SkippedSource:
    path: str
    reason: str


def ingest_sources(root_path: str | Path, compiler: str | None = None,
                   skipped: list[SkippedSource] | None = None) -> list[ScrSourceUnit]:
    """One unit per compilable ``.sol`` file below ``root_path``.

    Files that fail to compile are logged and appended to ``skipped``.
    """
    root = Path(root_path)
    if not root.is_dir():
        raise NoSources(f"{root} is not a readable directory")
    files = sorted(p for p in root.rglob("*.sol") if p.is_file())
    if not files:
        raise NoSources(f"no .sol files under {root}")
    units = []
    for path in files:
        rel = path.relative_to(root)
        try:
            text = path.read_text(encoding="utf-8")
            if not text.strip():
                raise ScrsError("empty source file")
            model = load_contract_ast(compile_file(path, compiler))
        except (ScrsError, OSError, UnicodeDecodeError) as exc:
            logger.warning("skipping %s: %s", rel, exc)
            if skipped is not None:
                skipped.append(SkippedSource(rel.as_posix(), str(exc)))
            continue
        units.append(ScrSourceUnit(rel.as_posix(), origin_of(rel), text, model, path))
        logger.info("ingested %s (%d contracts)", rel, len(model.primary_contracts()))
    return units
