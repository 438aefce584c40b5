"""Composite signature, logical sequence and structural embedding extraction."""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field

import networkx as nx

from scrs.features.graph import Cfg, CompositeGraph
from scrs.features.model import (
    ContractDecl,
    ContractModel,
    FunctionDecl,
    line_span,
    normalize_ws,
    parse_src,
    return_type_token,
)

RETURN_CLASSES = ("void", "bool", "uint", "int", "address", "bytes", "string", "array", "tuple", "other")


def _sanitize(name: str) -> str:
    return name.replace("-", "_")


@dataclass(frozen=True)
class CompositeSignature:
    contract_name: str
    function_name: str
    param_count: int
    return_type: str = "void"

    def __post_init__(self):
        object.__setattr__(self, "contract_name", _sanitize(self.contract_name))
        object.__setattr__(self, "function_name", _sanitize(self.function_name))
        object.__setattr__(self, "return_type", _sanitize(self.return_type or "void"))
        if self.param_count < 0:
            raise ValueError("param_count must be non-negative")

    def items(self) -> tuple[str, str, str, str]:
        return (self.contract_name, self.function_name, str(self.param_count), self.return_type)

    def render(self) -> str:
        return "-".join(self.items())

    @classmethod
    def parse(cls, text: str) -> "CompositeSignature":
        parts = text.split("-")
        if len(parts) != 4:
            raise ValueError(f"not a composite signature: {text!r}")
        return cls(parts[0], parts[1], int(parts[2]), parts[3])

    def __str__(self) -> str:
        return self.render()


class ConstraintKind(str, enum.Enum):
    MODIFIER = "Modifier"
    IF = "If"
    REQUIRE = "Require"
    REVERT = "Revert"


@dataclass(frozen=True)
class LogicalConstraint:
    kind: ConstraintKind
    condition_text: str = ""

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "condition": self.condition_text}


@dataclass(frozen=True)
class LogicalSequence:
    steps: tuple[LogicalConstraint, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    def to_list(self) -> list[dict]:
        return [s.to_dict() for s in self.steps]

    @classmethod
    def from_list(cls, items: list) -> "LogicalSequence":
        steps = []
        for it in items:
            if isinstance(it, dict):
                steps.append(LogicalConstraint(ConstraintKind(it["kind"]), it.get("condition", "")))
            else:
                steps.append(LogicalConstraint(ConstraintKind(it[0]), it[1]))
        return cls(tuple(steps))

    def render(self) -> str:
        """Numbered form used in prompts: ``1: require(cond)``."""
        lines = []
        for i, s in enumerate(self.steps, 1):
            word = s.kind.value.lower()
            lines.append(f"{i}: {word}({s.condition_text})")
        return "\n".join(lines) if lines else "(none)"


@dataclass(frozen=True)
class StructuralEmbedding:
    node_count: int = 0
    param_count: int = 0
    return_class: tuple[int, ...] = (1,) + (0,) * 9
    internal_call_count: int = 0
    external_call_count: int = 0
    cfg_attrs: tuple[int, int, int, int, int, int] = (0, 0, 0, 0, 0, 0)

    def numeric_vector(self) -> list[float]:
        return [float(self.node_count), float(self.param_count),
                float(self.internal_call_count), float(self.external_call_count),
                *map(float, self.return_class)]

    def control_vector(self) -> list[float]:
        return [float(x) for x in self.cfg_attrs]

    def return_class_name(self) -> str:
        return RETURN_CLASSES[self.return_class.index(1)]

    def to_dict(self) -> dict:
        return {
            "basic": {"node_count": self.node_count, "param_count": self.param_count,
                      "return_class": self.return_class_name()},
            "pcg": {"internal_call_count": self.internal_call_count,
                    "external_call_count": self.external_call_count},
            "cfg": dict(zip(("entry", "variable", "expression", "conditional", "loop", "return"),
                            self.cfg_attrs)),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StructuralEmbedding":
        cfg = d["cfg"]
        return cls(
            node_count=d["basic"]["node_count"],
            param_count=d["basic"]["param_count"],
            return_class=one_hot_return(d["basic"]["return_class"]),
            internal_call_count=d["pcg"]["internal_call_count"],
            external_call_count=d["pcg"]["external_call_count"],
            cfg_attrs=tuple(cfg[k] for k in ("entry", "variable", "expression", "conditional", "loop", "return")),
        )


class UsageKind(str, enum.Enum):
    CALL = "Call"
    INHERIT = "Inherit"
    OVERRIDE = "Override"


class UsageGroup(str, enum.Enum):
    G_T = "G_T"
    G_O = "G_O"


def group_of(kind: UsageKind) -> UsageGroup:
    return UsageGroup.G_T if kind is UsageKind.CALL else UsageGroup.G_O


@dataclass(frozen=True)
class UsageSite:
    contract: str
    function: str
    src: str
    lines: tuple[int, int] | None = None


@dataclass(frozen=True)
class ScrUsage:
    kind: UsageKind
    site: UsageSite
    signature: CompositeSignature
    sequence: LogicalSequence
    embedding: StructuralEmbedding
    # SCR function definition text and related SCR calls, recorded for snapshots
    definition: str = ""
    related_calls: tuple[str, ...] = ()
    overridden_function: str = "none"
    arguments: tuple[dict, ...] = field(default=(), compare=False)

    @property
    def group(self) -> UsageGroup:
        return group_of(self.kind)

    @property
    def key(self) -> str:
        return f"{self.kind.value}:{self.site.contract}.{self.site.function}@{self.site.src}:{self.signature.render()}"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "group": self.group.value,
            "site": asdict(self.site),
            "signature": self.signature.render(),
            "sequence": self.sequence.to_list(),
            "embedding": self.embedding.to_dict(),
            "definition": self.definition,
            "related_calls": list(self.related_calls),
            "overridden_function": self.overridden_function,
        }


# ---------------------------------------------------------------------------


def return_class_of(return_token: str) -> str:
    t = return_token
    if t == "void":
        return "void"
    if t == "tuple":
        return "tuple"
    if t.endswith("]"):
        return "array"
    if t == "bool":
        return "bool"
    if t.startswith("uint"):
        return "uint"
    if t.startswith("int"):
        return "int"
    if t == "address":
        return "address"
    if t.startswith("bytes"):
        return "bytes"
    if t == "string":
        return "string"
    return "other"


def one_hot_return(cls_name: str) -> tuple[int, ...]:
    return tuple(int(c == cls_name) for c in RETURN_CLASSES)


def extract_signature(function: FunctionDecl, owner: ContractDecl | str) -> CompositeSignature:
    name = owner if isinstance(owner, str) else owner.name
    return CompositeSignature(name, function.name, function.arity, return_type_token(function.return_types))


def definition_text(owner: str, fn: FunctionDecl) -> str:
    params = ",".join(t for _, t in fn.params)
    head = f"function {owner}.{fn.name}({params})"
    if fn.return_types:
        head += f" returns ({','.join(fn.return_types)})"
    return head


def _dominator_chain(cfg: Cfg, target: int) -> list[int]:
    idom = nx.immediate_dominators(cfg.graph, cfg.entry)
    chain = []
    node = target
    while node != cfg.entry:
        node = idom[node]
        chain.append(node)
    return list(reversed(chain))


def _branch_reverts(cfg: Cfg, nodes: list[int]) -> tuple[bool, str | None]:
    """Whether a branch terminates (revert/return) and the first revert text."""
    present = [n for n in nodes if n in cfg.graph]
    revert_text = None
    stops = False
    for n in present:
        attrs = cfg.graph.nodes[n]
        if attrs.get("role") == "revert":
            stops = True
            if revert_text is None:
                revert_text = attrs.get("text", "")
        elif attrs["kind"] == "return":
            stops = True
    return stops, revert_text


def guard_steps(fn: FunctionDecl, cfg: Cfg, target: int | None) -> LogicalSequence:
    """Modifiers, then if/require/revert guards dominating ``target``.

    With ``target=None`` the guards dominating every normal exit of the
    function are collected (used for knowledge-base records).
    """
    steps = [LogicalConstraint(ConstraintKind.MODIFIER, normalize_ws(text)) for _, text in fn.modifiers]
    if cfg.entry is None:
        return LogicalSequence(tuple(steps))
    g = cfg.graph
    if target is None:
        exits = [n for n in g.nodes if g.out_degree(n) == 0 and g.nodes[n].get("role") != "revert"]
        if not exits:
            return LogicalSequence(tuple(steps))
        chains = [set(_dominator_chain(cfg, e)) | {e} for e in exits]
        common = set.intersection(*chains)
        chain = sorted(common, key=lambda n: len(_dominator_chain(cfg, n)))
        inside = set()
    else:
        chain = _dominator_chain(cfg, target)
        inside = {target}
    for n in chain:
        attrs = g.nodes[n]
        role = attrs.get("role")
        if role == "require":
            steps.append(LogicalConstraint(ConstraintKind.REQUIRE, attrs.get("text", "")))
        elif role == "if":
            t_nodes, f_nodes = attrs.get("true_nodes", []), attrs.get("false_nodes", [])
            in_true = bool(inside & set(t_nodes))
            in_false = bool(inside & set(f_nodes))
            cond = attrs.get("text", "")
            if in_true and not in_false:
                steps.append(LogicalConstraint(ConstraintKind.IF, cond))
                continue
            if in_false and not in_true:
                steps.append(LogicalConstraint(ConstraintKind.IF, f"!({cond})"))
                continue
            t_stop, t_rev = _branch_reverts(cfg, t_nodes)
            f_stop, f_rev = _branch_reverts(cfg, f_nodes)
            if t_stop or f_stop:
                steps.append(LogicalConstraint(ConstraintKind.IF, cond if t_stop else f"!({cond})"))
                rev = t_rev if t_stop else f_rev
                if rev is not None:
                    steps.append(LogicalConstraint(ConstraintKind.REVERT, rev))
    return LogicalSequence(tuple(steps))


def extract_logical_sequence(site, graph: CompositeGraph) -> LogicalSequence:
    """Guards surrounding a call site.

    ``site`` is a :class:`~scrs.features.graph.CallSite` or a
    ``(function id, call AST id)`` pair.
    """
    if isinstance(site, tuple):
        fid, call_id = site
    else:
        fid, call_id = site.caller, site.ast_id
    _, fn = graph.functions[fid]
    cfg = graph.cfg_per_function[fid]
    node = cfg.call_sites.get(call_id)
    if node is None:
        return LogicalSequence()
    return guard_steps(fn, cfg, node)


def extract_embedding(function: FunctionDecl, graph: CompositeGraph, fid: str | None = None) -> StructuralEmbedding:
    if fid is None:
        fid = next(k for k, (_, f) in graph.functions.items() if f is function)
    cfg = graph.cfg_per_function.get(fid)
    counts = cfg.kind_counts() if cfg is not None else dict.fromkeys(("entry",), 0)
    cfg_attrs = tuple(counts.get(k, 0) for k in ("entry", "variable", "expression", "conditional", "loop", "return"))
    sites = graph.calls.get(fid, [])
    return StructuralEmbedding(
        node_count=sum(cfg_attrs),
        param_count=function.arity,
        return_class=one_hot_return(return_class_of(return_type_token(function.return_types))),
        internal_call_count=sum(1 for s in sites if s.label == "internal"),
        external_call_count=sum(1 for s in sites if s.label == "external"),
        cfg_attrs=cfg_attrs,  # type: ignore[arg-type]
    )


def zero_embedding(param_count: int, return_token: str) -> StructuralEmbedding:
    return StructuralEmbedding(param_count=param_count, return_class=one_hot_return(return_class_of(return_token)))


def function_guards(function: FunctionDecl, graph: CompositeGraph, fid: str) -> LogicalSequence:
    return guard_steps(function, graph.cfg_per_function[fid], None)


def _site(model: ContractModel, contract: str, function: str, src: str) -> UsageSite:
    return UsageSite(contract, function, src, line_span(model, src))


def _related_calls(graph: CompositeGraph, fid: str | None) -> tuple[str, ...]:
    if fid is None:
        return ()
    return tuple(sorted({f"{s.contract}.{s.function}" for s in graph.calls.get(fid, []) if s.label == "external"}))


def detect_scr_usages(model: ContractModel, graph: CompositeGraph,
                      contracts: list[ContractDecl] | None = None) -> list[ScrUsage]:
    """Calls, inheritance and overriding of reusable components.

    Only contracts of the model's primary sources are scanned unless
    ``contracts`` is given; imported component sources are not usage sites.
    """
    scope = contracts if contracts is not None else model.primary_contracts()
    usages: list[tuple[tuple, ScrUsage]] = []
    file_order = {path: i for i, path in sorted(model.source_ids.items())}

    def order_key(contract: ContractDecl, src: str) -> tuple:
        start, length, idx = parse_src(src)
        return (file_order.get(contract.source_path, idx), start, length)

    for contract in scope:
        fids = {id(f): graph.fid_of(contract, f) for f in contract.functions}

        for fn in contract.functions:
            fid = fids[id(fn)]
            for site in graph.calls.get(fid, []):
                if site.label != "external":
                    continue
                tdecl = model.contract(site.contract)
                tfn = tdecl.function(site.function, site.arity) if tdecl is not None else None
                if tfn is not None:
                    sig = extract_signature(tfn, tdecl)
                    tfid = graph.fid_of(tdecl, tfn)
                    emb = extract_embedding(tfn, graph, tfid)
                    definition = definition_text(tdecl.name, tfn)
                else:
                    ret = return_type_token(list(site.returns))
                    sig = CompositeSignature(site.contract, site.function, site.arity, ret)
                    emb = zero_embedding(site.arity, ret)
                    definition = f"function {site.contract}.{site.function}/{site.arity}"
                usages.append((
                    order_key(contract, site.src),
                    ScrUsage(
                        kind=UsageKind.CALL,
                        site=_site(model, contract.name, fn.name, site.src),
                        signature=sig,
                        sequence=extract_logical_sequence(site, graph),
                        embedding=emb,
                        definition=definition,
                        related_calls=_related_calls(graph, fid),
                        arguments=site.arguments,
                    ),
                ))

        ctor = next((f for f in contract.functions if f.kind == "constructor"), None)
        for base in contract.bases:
            bdecl = model.contract(base)
            bctor = next((f for f in bdecl.functions if f.kind == "constructor"), None) if bdecl else None
            if bctor is not None:
                sig = extract_signature(bctor, bdecl)
                definition = definition_text(base, bctor)
            else:
                nargs = next((n for b, n in (ctor.base_constructor_calls if ctor else []) if b == base), 0)
                sig = CompositeSignature(base, "constructor", nargs, "void")
                definition = f"contract {base}"
            if ctor is not None:
                cfid = fids[id(ctor)]
                emb = extract_embedding(ctor, graph, cfid)
                src = ctor.src
                related = _all_calls(graph, cfid)
            else:
                emb = zero_embedding(sig.param_count, "void")
                src = contract.src
                related = ()
            usages.append((
                order_key(contract, contract.src),
                ScrUsage(
                    kind=UsageKind.INHERIT,
                    site=_site(model, contract.name, "constructor" if ctor else "", src),
                    signature=sig,
                    sequence=LogicalSequence(),
                    embedding=emb,
                    definition=definition,
                    related_calls=related,
                ),
            ))

        for fn in contract.functions:
            if fn.overrides is None:
                continue
            base, fname = fn.overrides
            bdecl = model.contract(base)
            bfn = bdecl.function(fname, fn.arity) if bdecl is not None else None
            if bfn is not None:
                sig = extract_signature(bfn, bdecl)
                definition = definition_text(base, bfn)
            else:
                sig = CompositeSignature(base, fname, fn.arity, return_type_token(fn.return_types))
                definition = f"function {base}.{fname}"
            fid = fids[id(fn)]
            usages.append((
                order_key(contract, fn.src),
                ScrUsage(
                    kind=UsageKind.OVERRIDE,
                    site=_site(model, contract.name, fn.name, fn.src),
                    signature=sig,
                    sequence=LogicalSequence(),
                    embedding=extract_embedding(fn, graph, fid),
                    definition=definition,
                    related_calls=_all_calls(graph, fid),
                    overridden_function=f"{base}.{fname}",
                ),
            ))
    usages.sort(key=lambda pair: (pair[0], pair[1].kind.value, pair[1].signature.render()))
    return [u for _, u in usages]


def _all_calls(graph: CompositeGraph, fid: str) -> tuple[str, ...]:
    return tuple(sorted({f"{s.contract}.{s.function}" for s in graph.calls.get(fid, [])}))
