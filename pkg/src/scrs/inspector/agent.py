"""Staged inspection of component usages.

Inheritance and overriding usages get three comprehensive questions
(added, removed, modified logic).  Calls go through a triage over the whole
contract, a threat elicitation per flagged call, and a second opinion
against the retrieved reference knowledge; only calls confirmed by the
last stage become findings.  Every stage leaves a snapshot.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from scrs.errors import StructureViolation
from scrs.features.bundle import ContractFeatures
from scrs.features.compress import ScrUsage, UsageGroup, UsageKind
from scrs.features.model import slice_source
from scrs.inspector.snapshots import Phase, SnapshotRepository, capture_snapshot
from scrs.inspector.stages import Stage, StageOutput, parse_stage_response
from scrs.llm import Backend, CompletionRequest
from scrs.prompting import render, template
from scrs.retrieval import DEFAULT_WEIGHTS, RetrievalHit, retrieve_reference

logger = logging.getLogger(__name__)

STAGE_PHASE = {
    Stage.C1: Phase.STAGE1, Stage.T1: Phase.STAGE1,
    Stage.C2: Phase.STAGE2, Stage.T2: Phase.STAGE2,
    Stage.C3: Phase.STAGE3, Stage.T3: Phase.STAGE3,
}


@dataclass
class Finding:
    usage: ScrUsage
    group: UsageGroup
    threat_vectors: list[str] = field(default_factory=list)
    stage_outputs: list[StageOutput] = field(default_factory=list)
    snapshots: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "usage": self.usage.to_dict(),
            "group": self.group.value,
            "threat_vectors": list(self.threat_vectors),
            "stage_outputs": [s.to_dict() for s in self.stage_outputs],
            "snapshots": list(self.snapshots),
        }


@dataclass(frozen=True)
class Diagnostic:
    usage: str
    stage: str
    message: str

    def to_dict(self) -> dict:
        return {"usage": self.usage, "stage": self.stage, "message": self.message}


def usage_tag(usage: ScrUsage) -> str:
    start = usage.site.src.split(":")[0]
    line = f"L{usage.site.lines[0]}+{start}" if usage.site.lines else start
    where = f"{usage.site.contract}.{usage.site.function or '<contract>'}"
    return f"{usage.kind.value}:{where}@{line}:{usage.signature.render()}"


def _site_text(usage: ScrUsage) -> str:
    where = f"{usage.site.contract}.{usage.site.function}" if usage.site.function else usage.site.contract
    if usage.site.lines:
        a, b = usage.site.lines
        return f"{where}, line {a}" if a == b else f"{where}, lines {a}-{b}"
    return where


def _system_text() -> str:
    return template("luv", "system").template.strip()


def ask_stage(backend: Backend, stage: Stage, tag: str, user_text: str) -> StageOutput:
    """One stage round trip with a single format retry."""
    system_text = _system_text()
    stage_tag = f"luv/{stage.value}/{tag}"
    raw = backend.complete(CompletionRequest(stage_tag, system_text, user_text))
    try:
        return parse_stage_response(raw, stage)
    except StructureViolation as exc:
        retry_text = render("luv", "retry", original=user_text.rstrip(), error=str(exc))
    raw = backend.complete(CompletionRequest(stage_tag + "/retry", system_text, retry_text))
    return parse_stage_response(raw, stage)


def feature_payload(usage: ScrUsage) -> dict:
    sig = usage.signature
    return {
        "signature": sig.render(),
        "definition": usage.definition,
        "parameters": sig.param_count,
        "return_type": sig.return_type,
        "parent_contract": sig.contract_name,
        "overridden_function": usage.overridden_function,
        "related_calls": list(usage.related_calls),
    }


def _capture_stage(out: StageOutput, snapshot: dict, repository: SnapshotRepository, subject: str,
                   threats: list[str] = ()) -> str:
    return capture_snapshot(STAGE_PHASE[out.stage], snapshot, repository, subject, threats)


def run_comprehensive(contract_features: ContractFeatures, usage: ScrUsage, hit: RetrievalHit,
                      llm_backend: Backend, repository: SnapshotRepository,
                      diagnostics: list[Diagnostic] | None = None) -> Finding | None:
    """Stages C1-C3 for an inheritance or overriding usage; ``None`` when nothing is found."""
    if usage.kind not in (UsageKind.INHERIT, UsageKind.OVERRIDE):
        raise ValueError(f"comprehensive analysis covers inheritance and overriding, not {usage.kind.value}")
    tag = usage_tag(usage)
    snaps = [capture_snapshot(Phase.FEATURE_EXTRACTION, feature_payload(usage), repository, tag)]
    values = {
        "contract": usage.site.contract,
        "usage_kind": "inheritance" if usage.kind is UsageKind.INHERIT else "override",
        "signature": usage.signature.render(),
        "site": _site_text(usage),
        "definition": usage.definition,
        "source": contract_features.contract_source(usage.site.contract),
        "reference": hit.record.render(),
    }
    outputs: list[StageOutput] = []
    threats: list[str] = []
    for stage in (Stage.C1, Stage.C2, Stage.C3):
        try:
            out = ask_stage(llm_backend, stage, tag, render("luv", stage.value, **values))
        except StructureViolation as exc:
            logger.warning("dropping %s: %s", tag, exc)
            if diagnostics is not None:
                diagnostics.append(Diagnostic(tag, stage.value, f"StructureViolation: {exc}"))
            return None
        outputs.append(out)
        stage_threats = out.structured.get("threats" if stage is not Stage.C1 else "findings", [])
        if out.verdict.positive:
            threats.extend(stage_threats)
        snaps.append(_capture_stage(out, out.structured.get("snapshot", {}), repository, tag, stage_threats))
    if not any(o.verdict.positive for o in outputs):
        if diagnostics is not None:
            diagnostics.append(Diagnostic(tag, "C3", "no stage reported a problem"))
        return None
    return Finding(usage, usage.group, threats, outputs, snaps)


def _call_listing(features: ContractFeatures, usages: list[ScrUsage]) -> str:
    lines = []
    for i, u in enumerate(usages, 1):
        text = " ".join((slice_source(features.model, u.site.src) or u.signature.render()).split())
        line = u.site.lines[0] if u.site.lines else "?"
        args = ", ".join(f"{a['text']} <{a['source']}>" for a in u.arguments)
        lines.append(f"{i}. line {line} in {u.site.function}: {text}\n"
                     f"   component {u.signature.render()}; arguments: {args or '(none)'}")
    return "\n".join(lines)


def run_targeted(contract_features: ContractFeatures, usages: list[ScrUsage], kb, llm_backend: Backend,
                 repository: SnapshotRepository, weights=DEFAULT_WEIGHTS,
                 diagnostics: list[Diagnostic] | None = None) -> list[Finding]:
    """Stages T1-T3 over the component calls of one contract file."""
    if any(u.kind is not UsageKind.CALL for u in usages):
        raise ValueError("targeted analysis covers component calls only")
    findings: list[Finding] = []
    by_contract: dict[str, list[ScrUsage]] = {}
    for u in usages:
        by_contract.setdefault(u.site.contract, []).append(u)

    def note(tag: str, stage: str, message: str) -> None:
        if diagnostics is not None:
            diagnostics.append(Diagnostic(tag, stage, message))

    for contract, group in by_contract.items():
        fe = {usage_tag(u): capture_snapshot(Phase.FEATURE_EXTRACTION, feature_payload(u), repository, usage_tag(u))
              for u in group}
        source = contract_features.contract_source(contract)
        try:
            t1 = ask_stage(llm_backend, Stage.T1, contract,
                           render("luv", "T1", contract=contract, source=source,
                                  calls=_call_listing(contract_features, group)))
        except StructureViolation as exc:
            logger.warning("dropping calls of %s: %s", contract, exc)
            for u in group:
                note(usage_tag(u), "T1", f"StructureViolation: {exc}")
            continue
        flagged: dict[int, dict] = {}
        if t1.verdict.positive:
            for entry in t1.structured.get("flagged", []):
                if 1 <= entry["index"] <= len(group):
                    flagged.setdefault(entry["index"] - 1, entry)
                else:
                    note(contract, "T1", f"ignored out-of-range call index {entry['index']}")
        for i, u in enumerate(group):
            tag = usage_tag(u)
            if i not in flagged:
                note(tag, "T1", "not flagged by triage")
                continue
            snaps = [fe[tag], _capture_stage(t1, flagged[i].get("snapshot", {}), repository, tag)]
            call_text = " ".join((slice_source(contract_features.model, u.site.src) or "").split())
            common = {
                "contract": contract,
                "call": f"{call_text} ({_site_text(u)})",
                "signature": u.signature.render(),
                "definition": u.definition,
                "guards": u.sequence.render(),
                "source": source,
            }
            try:
                t2 = ask_stage(llm_backend, Stage.T2, tag, render("luv", "T2", **common))
                threats = list(t2.structured.get("threats", []))
                snaps.append(_capture_stage(t2, t2.structured.get("snapshot", {}), repository, tag, threats))
                if not t2.verdict.positive:
                    note(tag, "T2", "no threat vector confirmed")
                    continue
                hit = retrieve_reference(u.signature, kb, weights)
                t3 = ask_stage(llm_backend, Stage.T3, tag, render(
                    "luv", "T3", **common,
                    threats="\n".join(f"- {t}" for t in threats) or "(none)",
                    reference=hit.record.render(), reference_id=hit.record.id,
                    reference_score=f"{hit.score:.4f}"))
            except StructureViolation as exc:
                logger.warning("dropping %s: %s", tag, exc)
                note(tag, "T2/T3", f"StructureViolation: {exc}")
                continue
            snaps.append(_capture_stage(t3, t3.structured.get("snapshot", {}), repository, tag))
            if not t3.verdict.positive:
                note(tag, "T3", "not confirmed by secondary validation")
                continue
            findings.append(Finding(u, u.group, threats, [t1, t2, t3], snaps))
    return findings
