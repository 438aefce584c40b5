"""End-to-end analysis of contract files and the report document."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from scrs.engine.similarity import CheckerParams, composite
from scrs.engine.verdict import FinalStatus, ViolationVerdict, finalize_verdicts
from scrs.features.bundle import ContractFeatures
from scrs.features.compress import UsageGroup
from scrs.inspector.agent import Diagnostic, run_comprehensive, run_targeted, usage_tag
from scrs.inspector.snapshots import SnapshotRepository
from scrs.llm import Backend
from scrs.retrieval import SignatureWeights, retrieve_reference

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
INSPECTOR_DROPPED = "Inspector-Dropped"


@dataclass
class ContractResult:
    features: ContractFeatures
    entries: list[dict]
    repository: SnapshotRepository
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def count(self, status: str) -> int:
        return sum(1 for e in self.entries if e["status"] == status)


def _rationale(v: ViolationVerdict, params: CheckerParams) -> str:
    s = v.scores
    if v.finding.group is UsageGroup.G_O:
        comp = composite(params.w_o, s)
        sim = f"composite {comp:.4f} {'<' if comp < params.tau_o else '>='} tau_o {params.tau_o:.4f}"
    else:
        comp = composite(params.w_t, s)
        sim = (f"composite {comp:.4f} {'<' if comp < params.tau_t else '>='} tau_t {params.tau_t:.4f}, "
               f"s_l {s.s_l:.4f} {'<' if s.s_l < params.tau_l else '>='} tau_l {params.tau_l:.4f}")
    if v.final is FinalStatus.DISCARDED_CONFLICT:
        c = v.conflict.conflicting_fields[0]
        return f"inference conflict on {c.field} ({c.phase_a} vs {c.phase_b}); {sim}"
    if v.final is FinalStatus.REJECTED_SIMILAR:
        return f"usage matches the reference closely: {sim}"
    threats = "; ".join(v.finding.threat_vectors) or "no threat text"
    return f"deviates from reference {v.reference.record.id}: {sim}. Threats: {threats}"


def _entry_for_verdict(v: ViolationVerdict, params: CheckerParams) -> dict:
    return {
        "usage": v.finding.usage.to_dict(),
        "status": v.final.value,
        "scores": v.scores.to_dict(),
        "flagged": v.flagged,
        "reference": {"id": v.reference.record.id, "score": round(v.reference.score, 12)},
        "threat_vectors": list(v.finding.threat_vectors),
        "stages": [{"stage": o.stage.value, "verdict": o.verdict.value} for o in v.finding.stage_outputs],
        "snapshots": list(v.snapshots),
        "conflicts": [c.to_dict() for c in v.conflict.conflicting_fields],
        "rationale": _rationale(v, params),
    }


def analyze_contract(features: ContractFeatures, kb, weights: SignatureWeights, params: CheckerParams,
                     llm_backend: Backend) -> ContractResult:
    repo = SnapshotRepository(prefix=features.name)
    diagnostics: list[Diagnostic] = []
    findings = []
    calls = [u for u in features.usages if u.group is UsageGroup.G_T]
    for usage in features.usages:
        if usage.group is UsageGroup.G_O:
            hit = retrieve_reference(usage.signature, kb, weights)
            finding = run_comprehensive(features, usage, hit, llm_backend, repo, diagnostics)
            if finding is not None:
                findings.append(finding)
    findings.extend(run_targeted(features, calls, kb, llm_backend, repo, weights, diagnostics))
    verdicts = {usage_tag(v.finding.usage): v for v in finalize_verdicts(findings, kb, weights, params, repo)}

    entries = []
    for usage in features.usages:
        tag = usage_tag(usage)
        if tag in verdicts:
            entries.append(_entry_for_verdict(verdicts[tag], params))
            continue
        notes = [d for d in diagnostics if d.usage == tag]
        entries.append({
            "usage": usage.to_dict(),
            "status": INSPECTOR_DROPPED,
            "scores": None,
            "flagged": None,
            "reference": None,
            "threat_vectors": [],
            "stages": [],
            "snapshots": [s.id for s in repo if s.subject == tag],
            "conflicts": [],
            "rationale": "; ".join(f"{d.stage}: {d.message}" for d in notes) or "not confirmed by the inspector",
        })
    return ContractResult(features, entries, repo, diagnostics)


def analyze_all(features: list[ContractFeatures], kb, weights: SignatureWeights, params: CheckerParams,
                llm_backend: Backend, workers: int = 4) -> list[ContractResult]:
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(lambda f: analyze_contract(f, kb, weights, params, llm_backend), features))


def build_report(results: list[ContractResult], weights: SignatureWeights, params: CheckerParams,
                 snapshots_file: str | None = None) -> dict:
    contracts = []
    summary = {"candidates": 0, "violations": 0, "conflicts_discarded": 0,
               "similarity_rejected": 0, "inspector_dropped": 0}
    for r in results:
        contracts.append({
            "file": r.features.name,
            "contracts": [c.name for c in r.features.model.primary_contracts()],
            "verdicts": r.entries,
            "diagnostics": [d.to_dict() for d in r.diagnostics],
        })
        summary["candidates"] += len(r.entries)
        summary["violations"] += r.count(FinalStatus.VIOLATION.value)
        summary["conflicts_discarded"] += r.count(FinalStatus.DISCARDED_CONFLICT.value)
        summary["similarity_rejected"] += r.count(FinalStatus.REJECTED_SIMILAR.value)
        summary["inspector_dropped"] += r.count(INSPECTOR_DROPPED)
    return {
        "schema_version": SCHEMA_VERSION,
        "settings": {"checker": params.to_dict(), "signature_weights": list(weights.w),
                     "weights_source": weights.source},
        "snapshots_file": snapshots_file,
        "contracts": contracts,
        "summary": summary,
    }


def render_text(report: dict) -> str:
    """Plain-text rendering: one block per verdict and a summary line."""
    out = []
    for c in report.get("contracts", []):
        out.append(f"== {c['file']} ==")
        for e in c["verdicts"]:
            u = e["usage"]
            site = u["site"]
            lines = site.get("lines")
            where = f"{site['contract']}.{site['function']}" if site.get("function") else site["contract"]
            if not lines:
                span = f"src {site['src']}"
            else:
                span = f"line {lines[0]}" if lines[0] == lines[1] else f"lines {lines[0]}-{lines[1]}"
            out.append(f"[{e['status'].upper()}] {u['kind']} {u['signature']} at {where} ({span})")
            if e.get("scores"):
                out.append("  scores: " + ", ".join(f"{k}={v:.4f}" for k, v in sorted(e["scores"].items())))
            if e.get("reference"):
                out.append(f"  reference: {e['reference']['id']} (score {e['reference']['score']:.4f})")
            for t in e.get("threat_vectors", []):
                out.append(f"  threat: {t}")
            for cf in e.get("conflicts", []):
                out.append(f"  conflict: {cf['field']} {cf['phase_a']}={cf['value_a']!r} "
                           f"vs {cf['phase_b']}={cf['value_b']!r}")
            out.append(f"  rationale: {e['rationale']}")
        out.append("")
    s = report.get("summary", {})
    out.append(f"{s.get('violations', 0)} violations, {s.get('conflicts_discarded', 0)} discarded by conflict, "
               f"{s.get('similarity_rejected', 0)} rejected as similar, {s.get('inspector_dropped', 0)} "
               f"dropped by the inspector, {s.get('candidates', 0)} candidates")
    return "\n".join(out) + "\n"
