"""Program call graph, per-function control-flow and def-use graphs.

CFG node kinds are ``entry``, ``variable``, ``expression``, ``conditional``,
``loop`` and ``return``.  One statement yields one node, except a ``return``
carrying a value, which yields an ``expression`` node followed by the
``return`` node.  ``require``/``assert`` statements and statements containing
a ternary are ``conditional``.  Nodes not reachable from entry are pruned.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import networkx as nx

from scrs.features.model import (
    ContractDecl,
    ContractModel,
    FunctionDecl,
    canonical_type,
    iter_nodes,
    normalize_ws,
    slice_source,
)
from scrs.features.render import render_expr

logger = logging.getLogger(__name__)

CFG_KINDS = ("entry", "variable", "expression", "conditional", "loop", "return")

GUARD_CALLS = {"require", "assert"}
REVERT_CALLS = {"revert"}
# identifiers the compiler binds to builtins rather than declarations
BUILTIN_FUNCTIONS = {
    "require", "assert", "revert", "keccak256", "sha256", "ripemd160", "ecrecover",
    "addmod", "mulmod", "selfdestruct", "suicide", "blockhash", "gasleft", "sha3", "type",
}
BUILTIN_MEMBERS = {
    "call", "delegatecall", "staticcall", "callcode", "transfer", "send", "push", "pop",
    "encode", "encodePacked", "encodeWithSelector", "encodeWithSignature", "encodeCall",
    "decode", "concat", "wrap", "unwrap",
}
BUILTIN_BASES = {"abi", "msg", "block", "tx", "bytes", "string", "type"}


def function_id(contract: str, fn: FunctionDecl) -> str:
    return f"{contract}.{fn.name}/{fn.arity}"


@dataclass
class Cfg:
    graph: nx.DiGraph
    entry: int | None
    # FunctionCall AST id -> CFG node holding it
    call_sites: dict[int, int] = field(default_factory=dict)

    def kind_counts(self) -> dict[str, int]:
        counts = dict.fromkeys(CFG_KINDS, 0)
        for _, kind in self.graph.nodes(data="kind"):
            counts[kind] += 1
        return counts

    def to_dict(self) -> dict:
        nodes = []
        for n in sorted(self.graph.nodes):
            attrs = self.graph.nodes[n]
            item = {"id": n, "kind": attrs["kind"], "text": attrs.get("text", "")}
            if attrs.get("role"):
                item["role"] = attrs["role"]
            nodes.append(item)
        edges = sorted([a, b] for a, b in self.graph.edges)
        return {"entry": self.entry, "nodes": nodes, "edges": edges}


@dataclass(frozen=True)
class CallSite:
    caller: str  # function id
    target: str  # function id (may be undeclared)
    contract: str
    function: str
    arity: int
    returns: tuple[str, ...]
    label: str  # internal | external
    src: str
    ast_id: int
    declared: bool
    arguments: tuple[dict, ...] = ()


@dataclass
class CompositeGraph:
    pcg: nx.MultiDiGraph
    cfg_per_function: dict[str, Cfg]
    dfg_per_function: dict[str, list[tuple[int, int, str]]]
    functions: dict[str, tuple[ContractDecl, FunctionDecl]]
    calls: dict[str, list[CallSite]]

    def fid_of(self, contract: ContractDecl, fn: FunctionDecl) -> str:
        for fid, (c, f) in self.functions.items():
            if c is contract and f is fn:
                return fid
        raise KeyError(f"{contract.name}.{fn.name} not in graph")

    def to_dict(self) -> dict:
        edges = sorted(
            [a, b, d["label"], d["src"]] for a, b, d in self.pcg.edges(data=True)
        )
        return {
            "pcg": {
                "nodes": [
                    {"id": n, "declared": bool(self.pcg.nodes[n].get("declared"))} for n in sorted(self.pcg.nodes)
                ],
                "edges": edges,
            },
            "cfg": {fid: cfg.to_dict() for fid, cfg in sorted(self.cfg_per_function.items())},
            "dfg": {fid: sorted(list(e) for e in edges_) for fid, edges_ in sorted(self.dfg_per_function.items())},
        }


# ---------------------------------------------------------------------------
# CFG construction


def _callee_name(call: dict) -> str:
    expr = call.get("expression") or {}
    if expr.get("nodeType") == "Identifier":
        return expr.get("name", "")
    return ""


def _is_builtin_call(call: dict, names: set[str]) -> bool:
    return call.get("nodeType") == "FunctionCall" and _callee_name(call) in names


def _expr_calls(node: dict | None) -> list[dict]:
    if not node:
        return []
    return [n for n in iter_nodes(node) if n["nodeType"] == "FunctionCall"]


def _has_ternary(node: dict | None) -> bool:
    return bool(node) and any(n["nodeType"] == "Conditional" for n in iter_nodes(node))


class _CfgBuilder:
    def __init__(self, model: ContractModel):
        self.model = model
        self.g = nx.DiGraph()
        self.call_sites: dict[int, int] = {}
        self.loops: list[dict[str, list[int]]] = []

    def text(self, node: dict | None) -> str:
        if not node:
            return ""
        sliced = slice_source(self.model, node.get("src", ""))
        if sliced is not None:
            return normalize_ws(sliced)
        return render_expr(node)

    def add(self, kind: str, preds: list[int], text: str = "", role: str = "",
            ast: dict | None = None, calls_from: dict | None = None) -> int:
        nid = self.g.number_of_nodes()
        self.g.add_node(nid, kind=kind, text=text, role=role,
                        ast_id=(ast or {}).get("id"), src=(ast or {}).get("src", ""))
        for p in preds:
            self.g.add_edge(p, nid)
        for call in _expr_calls(calls_from):
            self.call_sites.setdefault(call["id"], nid)
        return nid

    def block(self, stmts: list[dict], preds: list[int]) -> list[int]:
        for stmt in stmts:
            preds = self.stmt(stmt, preds)
        return preds

    def stmt(self, s: dict, preds: list[int]) -> list[int]:
        nt = s.get("nodeType")
        if nt in ("Block", "UncheckedBlock"):
            return self.block(s.get("statements", []), preds)
        if nt == "VariableDeclarationStatement":
            self.add("variable", preds, self.text(s), ast=s, calls_from=s.get("initialValue"))
            return [self.g.number_of_nodes() - 1]
        if nt == "ExpressionStatement":
            expr = s.get("expression") or {}
            if _is_builtin_call(expr, GUARD_CALLS):
                args = expr.get("arguments") or []
                nid = self.add("conditional", preds, self.text(args[0]) if args else "",
                               role="require", ast=s, calls_from=expr)
                return [nid]
            if _is_builtin_call(expr, REVERT_CALLS):
                args = expr.get("arguments") or []
                self.add("expression", preds, ",".join(self.text(a) for a in args),
                         role="revert", ast=s, calls_from=expr)
                return []
            kind = "conditional" if _has_ternary(expr) else "expression"
            return [self.add(kind, preds, self.text(s), role="ternary" if kind == "conditional" else "",
                             ast=s, calls_from=expr)]
        if nt == "RevertStatement":
            call = s.get("errorCall") or {}
            self.add("expression", preds, self.text(call), role="revert", ast=s, calls_from=call)
            return []
        if nt == "EmitStatement":
            return [self.add("expression", preds, self.text(s), ast=s, calls_from=s.get("eventCall"))]
        if nt == "Return":
            expr = s.get("expression")
            if expr:
                preds = [self.add("expression", preds, self.text(expr), ast=s, calls_from=expr)]
            self.add("return", preds, self.text(s), ast=s)
            return []
        if nt == "IfStatement":
            cond = s.get("condition")
            c = self.add("conditional", preds, self.text(cond), role="if", ast=s, calls_from=cond)
            first = self.g.number_of_nodes()
            t_out = self.stmt(s["trueBody"], [c]) if s.get("trueBody") else [c]
            mid = self.g.number_of_nodes()
            f_out = self.stmt(s["falseBody"], [c]) if s.get("falseBody") else [c]
            last = self.g.number_of_nodes()
            self.g.nodes[c]["true_nodes"] = list(range(first, mid))
            self.g.nodes[c]["false_nodes"] = list(range(mid, last))
            return t_out + f_out
        if nt in ("ForStatement", "WhileStatement"):
            if nt == "ForStatement" and s.get("initializationExpression"):
                init = s["initializationExpression"]
                kind = "variable" if init.get("nodeType") == "VariableDeclarationStatement" else "expression"
                preds = [self.add(kind, preds, self.text(init), ast=init, calls_from=init)]
            cond = s.get("condition")
            loop = self.add("loop", preds, self.text(cond), ast=s, calls_from=cond)
            self.loops.append({"breaks": [], "continues": []})
            body_out = self.stmt(s["body"], [loop]) if s.get("body") else [loop]
            ctx = self.loops.pop()
            tail = body_out + ctx["continues"]
            if nt == "ForStatement" and s.get("loopExpression"):
                le = s["loopExpression"]
                tail = [self.add("expression", tail, self.text(le), ast=le, calls_from=le)] if tail else []
            for p in tail:
                self.g.add_edge(p, loop)
            return [loop] + ctx["breaks"]
        if nt == "DoWhileStatement":
            first = self.g.number_of_nodes()
            self.loops.append({"breaks": [], "continues": []})
            body_out = self.stmt(s["body"], preds) if s.get("body") else preds
            ctx = self.loops.pop()
            cond = s.get("condition")
            loop = self.add("loop", body_out + ctx["continues"], self.text(cond), ast=s, calls_from=cond)
            self.g.add_edge(loop, first if first < loop else loop)
            return [loop] + ctx["breaks"]
        if nt == "Break":
            if self.loops:
                self.loops[-1]["breaks"].extend(preds)
            return []
        if nt == "Continue":
            if self.loops:
                self.loops[-1]["continues"].extend(preds)
            return []
        if nt == "TryStatement":
            call = s.get("externalCall")
            c = self.add("conditional", preds, self.text(call), role="try", ast=s, calls_from=call)
            out: list[int] = []
            for clause in s.get("clauses", []):
                out += self.stmt(clause.get("block") or {"nodeType": "Block", "statements": []}, [c])
            return out
        # inline assembly, placeholders and unknown kinds are opaque expressions
        return [self.add("expression", preds, self.text(s), ast=s)]


def build_cfg(model: ContractModel, fn: FunctionDecl) -> Cfg:
    if fn.body_nodes is None:
        return Cfg(nx.DiGraph(), None)
    b = _CfgBuilder(model)
    entry = b.add("entry", [], fn.name)
    b.block(fn.body_nodes, [entry])
    reachable = nx.descendants(b.g, entry) | {entry}
    dead = [n for n in b.g.nodes if n not in reachable]
    if dead:
        b.g.remove_nodes_from(dead)
    sites = {k: v for k, v in b.call_sites.items() if v in reachable}
    return Cfg(b.g, entry, sites)


# ---------------------------------------------------------------------------
# def-use graph


def _names_used(node: dict | None) -> set[str]:
    if not node:
        return set()
    return {n["name"] for n in iter_nodes(node) if n["nodeType"] == "Identifier"}


def _assigned_names(node: dict | None) -> set[str]:
    out: set[str] = set()
    if not node:
        return out
    for n in iter_nodes(node):
        target = None
        if n["nodeType"] == "Assignment":
            target = n.get("leftHandSide")
        elif n["nodeType"] == "UnaryOperation" and n.get("operator") in ("++", "--", "delete"):
            target = n.get("subExpression")
        while target and target.get("nodeType") in ("IndexAccess", "MemberAccess"):
            target = target.get("baseExpression") or target.get("expression")
        if target and target.get("nodeType") == "Identifier":
            out.add(target["name"])
        elif target and target.get("nodeType") == "TupleExpression":
            out |= {c["name"] for c in target.get("components", []) if c and c.get("nodeType") == "Identifier"}
    return out


def _stmt_index(fn: FunctionDecl) -> dict[int, dict]:
    index: dict[int, dict] = {}
    for stmt in fn.body_nodes or []:
        for n in iter_nodes(stmt):
            index[n["id"]] = n
    return index


def build_dfg(fn: FunctionDecl, cfg: Cfg) -> list[tuple[int, int, str]]:
    """Reaching-definition def-use edges ``(def node, use node, variable)``."""
    if cfg.entry is None:
        return []
    g = cfg.graph
    ast_index = _stmt_index(fn)
    defs: dict[int, set[str]] = {}
    uses: dict[int, set[str]] = {}
    for n in g.nodes:
        attrs = g.nodes[n]
        if attrs["kind"] == "entry":
            defs[n] = {name for name, _ in fn.params if name}
            uses[n] = set()
            continue
        ast = ast_index.get(attrs.get("ast_id"))
        if ast is None:
            defs[n], uses[n] = set(), set()
            continue
        if ast.get("nodeType") == "VariableDeclarationStatement":
            defs[n] = {d["name"] for d in ast.get("declarations", []) if d}
            uses[n] = _names_used(ast.get("initialValue"))
        elif ast.get("nodeType") == "IfStatement":
            defs[n], uses[n] = set(), _names_used(ast.get("condition"))
        elif ast.get("nodeType") in ("ForStatement", "WhileStatement", "DoWhileStatement"):
            defs[n], uses[n] = set(), _names_used(ast.get("condition"))
        else:
            defs[n] = _assigned_names(ast)
            uses[n] = _names_used(ast)
    local = set().union(*defs.values()) if defs else set()

    # iterative reaching definitions over (node, var) pairs
    reach_in: dict[int, set[tuple[int, str]]] = {n: set() for n in g.nodes}
    reach_out: dict[int, set[tuple[int, str]]] = {n: set() for n in g.nodes}
    order = list(nx.dfs_preorder_nodes(g, cfg.entry))
    changed = True
    while changed:
        changed = False
        for n in order:
            rin = set().union(*(reach_out[p] for p in g.predecessors(n))) if g.in_degree(n) else set()
            killed = {d for d in rin if d[1] in defs[n]}
            rout = (rin - killed) | {(n, v) for v in defs[n]}
            if rin != reach_in[n] or rout != reach_out[n]:
                reach_in[n], reach_out[n] = rin, rout
                changed = True
    edges = set()
    for n in g.nodes:
        for d_node, var in reach_in[n]:
            if var in uses[n] and var in local:
                edges.add((d_node, n, var))
    return sorted(edges)


# ---------------------------------------------------------------------------
# call resolution


def _type_string(node: dict | None) -> str:
    return ((node or {}).get("typeDescriptions") or {}).get("typeString") or ""


def _contract_from_type(ts: str) -> str | None:
    for prefix in ("contract ", "type(contract ", "type(library ", "library ", "type(interface "):
        if ts.startswith(prefix):
            return ts[len(prefix):].rstrip(")").strip()
    return None


def _lookup_internal(model: ContractModel, contract: ContractDecl, name: str, arity: int):
    for cname in [contract.name] + model.transitive_bases(contract.name):
        decl = model.contract(cname)
        if decl is None:
            continue
        fn = decl.function(name, arity) or decl.function(name)
        if fn is not None:
            return cname, fn
    return None


def resolve_call(model: ContractModel, contract: ContractDecl, call: dict):
    """Resolve a FunctionCall node to ``(contract, function, arity, returns, declared)``.

    Returns ``None`` for builtins, type conversions, struct constructors, events
    and errors, which are not component calls.
    """
    if call.get("kind") in ("typeConversion", "structConstructorCall"):
        return None
    expr = call.get("expression") or {}
    while expr.get("nodeType") == "FunctionCallOptions":
        expr = expr.get("expression") or {}
    nargs = len(call.get("arguments") or [])
    ret_ts = _type_string(call)
    fallback_returns = (canonical_type(ret_ts),) if ret_ts and canonical_type(ret_ts) != "void" else ()

    ref_id = expr.get("referencedDeclaration")
    ref = model.declarations.get(ref_id) if isinstance(ref_id, int) else None
    if ref is not None:
        if ref.kind == "function":
            return ref.owner, ref.name, ref.arity, ref.returns, True
        if ref.kind == "variable":  # public getter
            return ref.owner, ref.name, nargs, ref.returns, True
        return None

    nt = expr.get("nodeType")
    if nt == "Identifier":
        name = expr.get("name", "")
        if name in BUILTIN_FUNCTIONS or (isinstance(ref_id, int) and ref_id < 0):
            return None
        if isinstance(ref_id, int) and ref_id >= 2**31:
            return None  # compiler-internal builtin id
        hit = _lookup_internal(model, contract, name, nargs)
        if hit is not None:
            cname, fn = hit
            return cname, fn.name, fn.arity, tuple(fn.return_types), True
        return "unknown", name, nargs, fallback_returns, False
    if nt == "MemberAccess":
        member = expr.get("memberName", "")
        base = expr.get("expression") or {}
        if base.get("nodeType") == "Identifier" and base.get("name") in BUILTIN_BASES:
            return None
        if base.get("nodeType") == "ElementaryTypeNameExpression":
            return None
        target = _contract_from_type(_type_string(base))
        if target is None and base.get("nodeType") == "Identifier" and model.contract(base.get("name", "")):
            target = base["name"]
        if target is None:
            if member in BUILTIN_MEMBERS or _type_string(base).startswith(("address", "bytes", "string")):
                return None
            target = "unknown"
        decl = model.contract(target)
        if decl is not None:
            fn = decl.function(member, nargs) or decl.function(member)
            if fn is not None:
                return target, fn.name, fn.arity, tuple(fn.return_types), True
        return target, member, nargs, fallback_returns, False
    return None


def _argument_info(call: dict, node: int | None, fn: FunctionDecl, dfg: list[tuple[int, int, str]],
                   cfg: Cfg, text) -> tuple[dict, ...]:
    params = [name for name, _ in fn.params]
    out = []
    for arg in call.get("arguments") or []:
        info = {"text": text(arg)}
        if arg.get("nodeType") == "Literal":
            info["source"] = "literal"
        elif arg.get("nodeType") == "Identifier":
            name = arg.get("name", "")
            origins = sorted(d for d, u, v in dfg if u == node and v == name)
            if not origins:
                info["source"] = "state" if name not in params else f"param:{params.index(name)}"
            else:
                labels = []
                for d in origins:
                    if d == cfg.entry and name in params:
                        labels.append(f"param:{params.index(name)}")
                    else:
                        labels.append(f"local:{d}")
                info["source"] = "|".join(labels)
        else:
            info["source"] = "expression"
        out.append(info)
    return tuple(out)


def build_composite_graph(model: ContractModel) -> CompositeGraph:
    pcg = nx.MultiDiGraph()
    cfgs: dict[str, Cfg] = {}
    dfgs: dict[str, list[tuple[int, int, str]]] = {}
    functions: dict[str, tuple[ContractDecl, FunctionDecl]] = {}
    calls: dict[str, list[CallSite]] = {}

    for contract in model.contracts:
        for fn in contract.functions:
            fid = function_id(contract.name, fn)
            k = 1
            while fid in functions:
                k += 1
                fid = f"{function_id(contract.name, fn)}#{k}"
            functions[fid] = (contract, fn)
            pcg.add_node(fid, declared=True)

    for fid, (contract, fn) in functions.items():
        cfg = build_cfg(model, fn)
        cfgs[fid] = cfg
        dfg = build_dfg(fn, cfg)
        dfgs[fid] = dfg
        builder = _CfgBuilder(model)
        sites: list[CallSite] = []
        for stmt in fn.body_nodes or []:
            for call in (n for n in iter_nodes(stmt) if n["nodeType"] == "FunctionCall"):
                if call["id"] not in cfg.call_sites:
                    continue  # dead code
                res = resolve_call(model, contract, call)
                if res is None:
                    continue
                tcontract, tname, tarity, treturns, declared = res
                lineage = [contract.name] + model.transitive_bases(contract.name)
                tdecl = model.contract(tcontract)
                tfn = tdecl.function(tname, tarity) if tdecl is not None else None
                internal = tcontract in lineage and any(
                    (c := model.contract(name)) is not None
                    and (f := c.function(tname, tarity)) is not None
                    and f.has_body
                    for name in lineage
                )
                target = f"{tcontract}.{tname}/{tarity}"
                if target not in pcg:
                    pcg.add_node(target, declared=False)
                label = "internal" if internal else "external"
                node = cfg.call_sites.get(call["id"])
                site = CallSite(
                    caller=fid, target=target, contract=tcontract, function=tname, arity=tarity,
                    returns=tuple(treturns), label=label, src=call.get("src", ""), ast_id=call["id"],
                    declared=declared and tfn is not None,
                    arguments=_argument_info(call, node, fn, dfg, cfg, builder.text),
                )
                sites.append(site)
                pcg.add_edge(fid, target, label=label, src=site.src)
        sites.sort(key=lambda s: _src_key(s.src))
        calls[fid] = sites
    return CompositeGraph(pcg, cfgs, dfgs, functions, calls)


def _src_key(src: str) -> tuple[int, int, int]:
    try:
        start, length, idx = (int(x) for x in src.split(":"))
        return idx, start, length
    except ValueError:
        return (-1, -1, -1)
