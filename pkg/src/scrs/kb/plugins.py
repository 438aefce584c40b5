"""Tool plugins the knowledge-base agent can invoke.

Tool-invoking plugins wrap program-analysis queries over a compiled unit;
response-processing plugins reshape tool output or exceptions into a form
that can be placed in a prompt.  Every result records its shape so the
transcript stays uniform.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from scrs.errors import PluginFailure, ScrsError, UnknownPlugin
from scrs.features.compiler import compile_file
from scrs.features.model import ContractModel, load_contract_ast, line_span
from scrs.prompting import iter_json_blocks, render

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PluginResult:
    plugin_id: str
    shape: str
    value: Any

    def to_transcript(self) -> dict:
        return {"plugin": self.plugin_id, "shape": self.shape, "value": self.value}


@dataclass
class PluginContext:
    units: dict = field(default_factory=dict)
    root: Path | None = None
    compiler: str | None = None

    def unit(self, ref):
        if isinstance(ref, str):
            try:
                return self.units[ref]
            except KeyError:
                raise ScrsError(f"unknown unit {ref!r}") from None
        return ref

    def model(self, ref) -> ContractModel:
        if isinstance(ref, ContractModel):
            return ref
        return self.unit(ref).compiled_model

    def path(self, ref) -> Path:
        p = Path(ref)
        if not p.is_absolute() and self.root is not None and not p.exists():
            p = self.root / p
        return p


def _contract(ctx: PluginContext, args: dict):
    model = ctx.model(args["unit"])
    decl = model.contract(args["contract"])
    if decl is None:
        raise ScrsError(f"no contract {args['contract']!r} in unit")
    return model, decl


def _function(ctx: PluginContext, args: dict):
    unit = ctx.unit(args["unit"])
    fid = args["function"]
    if fid not in unit.graph.functions:
        raise ScrsError(f"no function {fid!r} in unit")
    return unit, fid


def compile_solidity_contract(ctx: PluginContext, args: dict):
    return load_contract_ast(compile_file(ctx.path(args["path"]), ctx.compiler)).to_dict()


def read_specified_range(ctx: PluginContext, args: dict):
    start, end = (int(x) for x in args["range"])
    if start < 1 or end < start:
        raise ScrsError(f"bad line range {args['range']!r}")
    lines = ctx.path(args["path"]).read_text(encoding="utf-8").splitlines()
    return lines[start - 1:end]


def get_all_contracts(ctx: PluginContext, args: dict):
    return [c.name for c in ctx.model(args["unit"]).primary_contracts()]


def judge_interface(ctx: PluginContext, args: dict):
    """True when the contract declares behaviour without implementing it."""
    _, decl = _contract(ctx, args)
    return bool(decl.is_interface or (decl.functions and not any(f.has_body for f in decl.functions)))


def get_all_functions_by_contract(ctx: PluginContext, args: dict):
    unit = ctx.unit(args["unit"])
    _, decl = _contract(ctx, args)
    return [unit.graph.fid_of(decl, f) for f in decl.functions]


def extract_calls_by_function(ctx: PluginContext, args: dict):
    unit, fid = _function(ctx, args)
    out = []
    for site in unit.graph.calls.get(fid, []):
        span = line_span(unit.compiled_model, site.src)
        out.append({
            "target": f"{site.contract}.{site.function}",
            "arity": site.arity,
            "label": site.label,
            "line": span[0] if span else None,
            "arguments": [dict(a) for a in site.arguments],
        })
    return out


def extract_cfg_by_function(ctx: PluginContext, args: dict):
    unit, fid = _function(ctx, args)
    cfg = unit.graph.cfg_per_function[fid]
    return {"function": fid, "counts": cfg.kind_counts(), **cfg.to_dict()}


def json_data_parsing(ctx: PluginContext, args: dict):
    """First JSON object in the data, reduced by the strategy.

    Strategy keys: ``keys`` (keep only these), ``defaults`` (fill missing keys).
    """
    data = args["data"]
    strategy = args.get("strategy") or {}
    if isinstance(data, str):
        obj = next(iter_json_blocks(data), None)
        if obj is None:
            raise ScrsError("no JSON object in data")
    elif isinstance(data, dict):
        obj = data
    else:
        raise ScrsError(f"cannot parse {type(data).__name__} as JSON data")
    obj = {**strategy.get("defaults", {}), **obj}
    keys = strategy.get("keys")
    if keys:
        obj = {k: obj[k] for k in keys if k in obj}
    return obj


def list_data_parsing(ctx: PluginContext, args: dict):
    """Index a list by the strategy's ``key`` field (default: position)."""
    data = args["data"]
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError:
            data = [line.strip() for line in data.splitlines() if line.strip()]
    if not isinstance(data, list):
        raise ScrsError("list data expected")
    key = (args.get("strategy") or {}).get("key")
    out = {}
    for i, item in enumerate(data):
        k = str(item[key]) if key and isinstance(item, dict) and key in item else str(i)
        out[k] = item
    return out


def exception_parsing(ctx: PluginContext, args: dict):
    exc = args["exception"]
    template_id = args.get("template", "plugin-error")
    if isinstance(exc, BaseException):
        info = {"error_type": type(exc).__name__, "message": str(exc)}
    elif isinstance(exc, dict):
        info = {"error_type": exc.get("type", "Error"), "message": exc.get("message", "")}
    else:
        info = {"error_type": "Error", "message": str(exc)}
    values = {"plugin": args.get("plugin", "?"), **info, **(args.get("values") or {})}
    return render("uke", template_id, **values)


PLUGINS: dict[str, tuple[str, Callable[[PluginContext, dict], Any]]] = {
    "compile_solidity_contract": ("Class", compile_solidity_contract),
    "read_specified_range": ("List", read_specified_range),
    "get_all_contracts": ("List", get_all_contracts),
    "judge_interface": ("Bool", judge_interface),
    "get_all_functions_by_contract": ("List", get_all_functions_by_contract),
    "extract_calls_by_function": ("List", extract_calls_by_function),
    "extract_CFG_by_function": ("JSON", extract_cfg_by_function),
    "json_data_parsing": ("Map", json_data_parsing),
    "list_data_parsing": ("Map", list_data_parsing),
    "exception_parsing": ("String", exception_parsing),
}

SHAPE_TYPES = {"Class": dict, "List": list, "Bool": bool, "JSON": dict, "Map": dict, "String": str}


def invoke_plugin(plugin_id: str, args: dict, context: PluginContext | None = None) -> PluginResult:
    if plugin_id not in PLUGINS:
        raise UnknownPlugin(f"unknown plugin {plugin_id!r}")
    ctx = context or PluginContext()
    shape, fn = PLUGINS[plugin_id]
    try:
        value = fn(ctx, args)
    except Exception as exc:
        if plugin_id == "exception_parsing":
            raise PluginFailure(plugin_id, exc) from exc
        prompt = exception_parsing(ctx, {"exception": exc, "plugin": plugin_id})
        raise PluginFailure(plugin_id, exc, prompt) from exc
    return PluginResult(plugin_id, shape, value)
