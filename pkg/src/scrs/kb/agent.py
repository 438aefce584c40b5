"""Task planning and knowledge extraction for component source units.

Each unit is processed with a fixed plan: enumerate its contracts, skip
unimplemented ones, then for every function gather calls and control flow
with tool plugins before asking three comprehension questions (argument
rules, result checks, inheritor duties).
"""

from __future__ import annotations

import enum
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

from scrs.errors import PluginFailure, StructureViolation
from scrs.features.compress import definition_text, extract_embedding, extract_signature, function_guards
from scrs.features.model import slice_source
from scrs.kb.plugins import PluginContext, invoke_plugin
from scrs.kb.records import ConstraintClass, ParamConstraint, ReturnCheck, ScrRecord, UsageKnowledge
from scrs.kb.sources import ScrSourceUnit
from scrs.llm import Backend, CompletionRequest
from scrs.prompting import first_valid_block, render, template, validator

logger = logging.getLogger(__name__)

COMPREHENSION_TEMPLATES = ("param-constraints", "return-checks", "override-obligations")


class SubTaskKind(str, enum.Enum):
    COMPREHENSION = "Comprehension"
    TOOL_INVOCATION = "ToolInvocation"


@dataclass(frozen=True)
class SubTask:
    kind: SubTaskKind
    plugin_id: str | None = None
    prompt_template_id: str | None = None
    args: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if (self.kind is SubTaskKind.TOOL_INVOCATION) != (self.plugin_id is not None):
            raise ValueError("plugin_id is required exactly for tool invocations")
        if (self.kind is SubTaskKind.COMPREHENSION) != (self.prompt_template_id is not None):
            raise ValueError("prompt_template_id is required exactly for comprehension tasks")
        if self.plugin_id is not None and self.prompt_template_id is not None:
            raise ValueError("a sub-task names either a plugin or a prompt template")

    @property
    def name(self) -> str:
        return self.plugin_id or self.prompt_template_id or ""


def _tool(plugin_id: str, **args) -> SubTask:
    return SubTask(SubTaskKind.TOOL_INVOCATION, plugin_id=plugin_id, args=args)


def _ask(template_id: str, **args) -> SubTask:
    return SubTask(SubTaskKind.COMPREHENSION, prompt_template_id=template_id, args=args)


def plan_tasks(unit: ScrSourceUnit) -> list[SubTask]:
    ctx = PluginContext({unit.id: unit})
    tasks = [_tool("get_all_contracts", unit=unit.id)]
    for name in invoke_plugin("get_all_contracts", {"unit": unit.id}, ctx).value:
        tasks.append(_tool("judge_interface", unit=unit.id, contract=name))
        if invoke_plugin("judge_interface", {"unit": unit.id, "contract": name}, ctx).value:
            continue
        tasks.append(_tool("get_all_functions_by_contract", unit=unit.id, contract=name))
        for fid in invoke_plugin("get_all_functions_by_contract", {"unit": unit.id, "contract": name}, ctx).value:
            tasks.append(_tool("extract_calls_by_function", unit=unit.id, function=fid))
            tasks.append(_tool("extract_CFG_by_function", unit=unit.id, function=fid))
            for tid in COMPREHENSION_TEMPLATES:
                tasks.append(_ask(tid, unit=unit.id, function=fid))
    return tasks


@dataclass
class Transcript:
    """Tool results of one unit keyed by (plugin, function id or contract)."""

    entries: list[dict] = field(default_factory=list)
    results: dict[tuple[str, str], Any] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)

    def add(self, task: SubTask, value: Any) -> None:
        key = task.args.get("function") or task.args.get("contract") or task.args.get("unit", "")
        self.results[(task.name, key)] = value
        self.entries.append({"task": task.name, "args": dict(task.args), "value": value})


def _calls_text(calls: list[dict]) -> str:
    if not calls:
        return "(none)"
    lines = []
    for c in calls:
        args = ", ".join(f"{a['text']} <{a['source']}>" for a in c["arguments"])
        lines.append(f"- line {c['line']}: {c['target']}({args}) [{c['label']}]")
    return "\n".join(lines)


def _cfg_text(cfg: dict) -> str:
    counts = ", ".join(f"{k}={v}" for k, v in cfg["counts"].items())
    return f"{len(cfg['nodes'])} nodes ({counts})"


def _system_text() -> str:
    return template("uke", "system").template.strip()


def ask_structured(backend: Backend, stage_tag: str, system_text: str, user_text: str,
                   check, retry_template: tuple[str, str]) -> tuple[dict | None, str, list[str]]:
    """Ask once, retry once with the validation error, return (block, last raw text, errors)."""
    raw = backend.complete(CompletionRequest(stage_tag, system_text, user_text))
    block, errors = first_valid_block(raw, check)
    if block is not None:
        return block, raw, []
    agent, name = retry_template
    if agent == "uke":
        retry_text = invoke_plugin("exception_parsing", {
            "exception": StructureViolation(errors[-1]), "template": name,
            "values": {"original": user_text.rstrip(), "error": errors[-1]},
        }).value
    else:
        retry_text = render(agent, name, original=user_text.rstrip(), error=errors[-1])
    raw = backend.complete(CompletionRequest(stage_tag + "/retry", system_text, retry_text))
    block, more = first_valid_block(raw, check)
    return block, raw, errors + more


def extract_usage_knowledge(unit: ScrSourceUnit, function: str, llm_backend: Backend,
                            transcript: Transcript | None = None, strict: bool = False) -> UsageKnowledge:
    """Run the three comprehension prompts for one function and merge the answers."""
    contract, fn = unit.graph.functions[function]
    if transcript is None:
        transcript = Transcript()
    ctx = PluginContext({unit.id: unit})
    calls = transcript.results.get(("extract_calls_by_function", function))
    if calls is None:
        calls = invoke_plugin("extract_calls_by_function", {"unit": unit.id, "function": function}, ctx).value
    cfg = transcript.results.get(("extract_CFG_by_function", function))
    if cfg is None:
        cfg = invoke_plugin("extract_CFG_by_function", {"unit": unit.id, "function": function}, ctx).value
    sig = extract_signature(fn, contract)
    values = {
        "signature": sig.render(),
        "definition": definition_text(contract.name, fn),
        "contract": contract.name,
        "function": fn.name,
        "source": slice_source(unit.compiled_model, fn.src) or "(source unavailable)",
        "guards": function_guards(fn, unit.graph, function).render(),
        "calls": _calls_text(calls),
        "cfg": _cfg_text(cfg),
    }
    system_text = _system_text()
    blocks: dict[str, dict] = {}
    diagnostics: list[str] = []
    for tid in COMPREHENSION_TEMPLATES:
        tag = f"uke/{tid}/{unit.id}/{function}"
        block, _, errors = ask_structured(llm_backend, tag, system_text, render("uke", tid, **values),
                                          validator("uke", tid), ("uke", "format-retry"))
        if block is None:
            msg = f"{tag}: unusable response after retry: {errors[-1]}"
            if strict:
                raise StructureViolation(msg)
            logger.warning(msg)
            diagnostics.append(msg)
            continue
        blocks[tid] = invoke_plugin("json_data_parsing", {"data": block}).value

    params = []
    for c in blocks.get("param-constraints", {}).get("param_constraints", []):
        if c["index"] >= fn.arity:
            diagnostics.append(f"dropped constraint on parameter {c['index']} of a {fn.arity}-parameter function")
            continue
        params.append(ParamConstraint(c["index"], c["constraint"].strip(), ConstraintClass(c["class"])))
    checks = []
    for c in blocks.get("return-checks", {}).get("return_checks", []):
        if c["index"] >= len(fn.return_types):
            diagnostics.append(f"dropped check on return value {c['index']} of a "
                               f"{len(fn.return_types)}-result function")
            continue
        checks.append(ReturnCheck(c["index"], c["check"].strip()))
    obligations = [o.strip() for o in blocks.get("override-obligations", {}).get("override_obligations", [])]
    rationale = "\n".join(b["rationale"].strip() for tid in COMPREHENSION_TEMPLATES
                          if (b := blocks.get(tid)) and b.get("rationale", "").strip())
    return UsageKnowledge(tuple(params), tuple(checks), tuple(obligations), rationale, tuple(diagnostics))


def process_unit(unit: ScrSourceUnit, llm_backend: Backend) -> tuple[list[ScrRecord], Transcript]:
    """Execute the plan of one unit and turn every planned function into a record."""
    ctx = PluginContext({unit.id: unit})
    transcript = Transcript()
    knowledge: dict[str, UsageKnowledge] = {}
    planned: list[str] = []
    interfaces: list[str] = []
    for task in plan_tasks(unit):
        if task.kind is SubTaskKind.TOOL_INVOCATION:
            try:
                value = invoke_plugin(task.plugin_id, task.args, ctx).value
            except PluginFailure as exc:
                transcript.diagnostics.append(exc.prompt.strip())
                value = None
            transcript.add(task, value)
            if task.plugin_id == "judge_interface" and value:
                interfaces.append(task.args["contract"])
            continue
        fid = task.args["function"]
        if fid not in knowledge:
            planned.append(fid)
            knowledge[fid] = extract_usage_knowledge(unit, fid, llm_backend, transcript)
    records = []
    for fid, (contract, fn) in unit.graph.functions.items():
        if contract.name in interfaces:
            kn = UsageKnowledge()
        elif fid in knowledge:
            kn = knowledge[fid]
        else:
            continue
        sig = extract_signature(fn, contract)
        records.append(ScrRecord(
            id=sig.render(),
            signature=sig,
            sequence=function_guards(fn, unit.graph, fid),
            embedding=extract_embedding(fn, unit.graph, fid),
            knowledge=kn,
            provenance=unit.id,
            definition=definition_text(contract.name, fn),
        ))
    return records, transcript


def build_records(units: list[ScrSourceUnit], llm_backend: Backend, max_workers: int = 4) -> list[ScrRecord]:
    """Records of all units, deduplicated by signature (first unit in id order wins)."""
    ordered = sorted(units, key=lambda u: u.id)
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        results = list(pool.map(lambda u: process_unit(u, llm_backend)[0], ordered))
    seen: dict[str, ScrRecord] = {}
    for recs in results:
        for rec in recs:
            if rec.id in seen:
                logger.info("duplicate signature %s from %s ignored", rec.id, rec.provenance)
                continue
            seen[rec.id] = rec
    return sorted(seen.values(), key=lambda r: r.id)


def transcript_json(transcript: Transcript) -> str:
    return json.dumps(transcript.entries, sort_keys=True, default=str)
