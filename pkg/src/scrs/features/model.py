"""Contract model loaded from compiler-emitted Solidity AST documents.

The loader accepts the ``ast`` output of ``solc --standard-json`` for
compiler versions 0.5.x-0.8.x (the "compact" AST, every node carries a
``nodeType``).  A document may also be a bare ``SourceUnit`` node.  When the
document was produced by :func:`scrs.features.compiler.compile_file` it
additionally carries an ``x-scrs`` block with the original source texts,
which lets guard conditions be quoted verbatim instead of re-rendered.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from typing import Any, Iterator

from scrs.errors import MalformedAst, UnsupportedSchema

SUPPORTED_MINORS = range(5, 9)  # 0.5.x .. 0.8.x

_LOCATION_SUFFIX = re.compile(r"\s+(memory|calldata|storage(\s+(pointer|ref))?|pointer)\b")


@dataclass
class FunctionDecl:
    name: str
    params: list[tuple[str, str]]
    return_types: list[str]
    modifiers: list[tuple[str, str]]
    body_nodes: list[dict] | None  # None: declared without a body
    overrides: tuple[str, str] | None = None
    overrides_resolved: bool = True
    kind: str = "function"  # function | constructor | fallback | receive
    visibility: str = ""
    # (base contract, argument count) for base-constructor specifiers
    base_constructor_calls: list[tuple[str, int]] = field(default_factory=list)
    src: str = ""
    ast_id: int | None = None

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def has_body(self) -> bool:
        return self.body_nodes is not None


@dataclass
class ContractDecl:
    name: str
    is_interface: bool
    bases: list[str]
    functions: list[FunctionDecl]
    kind: str = "contract"  # contract | interface | library
    abstract: bool = False
    source_path: str = ""
    src: str = ""
    ast_id: int | None = None

    def function(self, name: str, arity: int | None = None) -> FunctionDecl | None:
        for fn in self.functions:
            if fn.name == name and (arity is None or fn.arity == arity):
                return fn
        return None


@dataclass(frozen=True)
class DeclRef:
    """Entry of the AST-id declaration table used for call resolution."""

    kind: str  # function | contract | variable | event | error | modifier | struct | enum
    name: str
    owner: str = ""
    arity: int = 0
    returns: tuple[str, ...] = ()
    contract_kind: str = ""


@dataclass
class ContractModel:
    contracts: list[ContractDecl] = field(default_factory=list)
    sources: dict[str, str] = field(default_factory=dict)
    source_ids: dict[int, str] = field(default_factory=dict)
    primary_sources: list[str] = field(default_factory=list)
    declarations: dict[int, DeclRef] = field(default_factory=dict)
    compiler_version: str = ""

    def contract(self, name: str) -> ContractDecl | None:
        for c in self.contracts:
            if c.name == name:
                return c
        return None

    def primary_contracts(self) -> list[ContractDecl]:
        if not self.primary_sources:
            return list(self.contracts)
        return [c for c in self.contracts if c.source_path in self.primary_sources]

    def transitive_bases(self, name: str) -> list[str]:
        """Bases of ``name`` in breadth-first declaration order, without repeats."""
        seen: list[str] = []
        queue = list(self.contract(name).bases) if self.contract(name) else []
        while queue:
            base = queue.pop(0)
            if base in seen or base == name:
                continue
            seen.append(base)
            decl = self.contract(base)
            if decl is not None:
                queue.extend(decl.bases)
        return seen

    def to_dict(self) -> dict:
        d = asdict(self)
        d["source_ids"] = {str(k): v for k, v in sorted(self.source_ids.items())}
        d["declarations"] = {str(k): asdict(v) for k, v in sorted(self.declarations.items())}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "ContractModel":
        contracts = []
        for c in d.get("contracts", []):
            fns = []
            for f in c["functions"]:
                fns.append(
                    FunctionDecl(
                        name=f["name"],
                        params=[tuple(p) for p in f["params"]],
                        return_types=list(f["return_types"]),
                        modifiers=[tuple(m) for m in f["modifiers"]],
                        body_nodes=f["body_nodes"],
                        overrides=tuple(f["overrides"]) if f.get("overrides") else None,
                        overrides_resolved=f.get("overrides_resolved", True),
                        kind=f.get("kind", "function"),
                        visibility=f.get("visibility", ""),
                        base_constructor_calls=[tuple(b) for b in f.get("base_constructor_calls", [])],
                        src=f.get("src", ""),
                        ast_id=f.get("ast_id"),
                    )
                )
            contracts.append(
                ContractDecl(
                    name=c["name"],
                    is_interface=c["is_interface"],
                    bases=list(c["bases"]),
                    functions=fns,
                    kind=c.get("kind", "contract"),
                    abstract=c.get("abstract", False),
                    source_path=c.get("source_path", ""),
                    src=c.get("src", ""),
                    ast_id=c.get("ast_id"),
                )
            )
        decls = {}
        for k, v in d.get("declarations", {}).items():
            v = dict(v)
            v["returns"] = tuple(v.get("returns", ()))
            decls[int(k)] = DeclRef(**v)
        return cls(
            contracts=contracts,
            sources=dict(d.get("sources", {})),
            source_ids={int(k): v for k, v in d.get("source_ids", {}).items()},
            primary_sources=list(d.get("primary_sources", [])),
            declarations=decls,
            compiler_version=d.get("compiler_version", ""),
        )


# ---------------------------------------------------------------------------
# type canonicalisation


def canonical_type(type_string: str) -> str:
    """Reduce a compiler type string to the single token used in signatures."""
    t = (type_string or "").strip()
    if not t:
        return "other"
    t = _LOCATION_SUFFIX.sub("", t).strip()
    if t.startswith("tuple(") or t.startswith("tuple ("):
        inner = t[t.index("(") + 1 : -1].strip()
        return "void" if not inner else "tuple"
    if t.startswith("mapping"):
        return "mapping"
    if t.startswith("function"):
        return "function"
    m = re.match(r"^(.*?)((\[\d*\])+)$", t)
    if m:
        return canonical_type(m.group(1)) + m.group(2)
    if t.startswith("contract ") or t.startswith("address"):
        return "address"
    if t.startswith("struct ") or t.startswith("enum "):
        t = t.split(" ", 1)[1].split(".")[-1]
    if t.startswith("type("):
        return "other"
    t = {"uint": "uint256", "int": "int256", "byte": "bytes1"}.get(t, t)
    return re.sub(r"\s+", "", t).replace("-", "_")


def return_type_token(return_types: list[str]) -> str:
    if not return_types:
        return "void"
    if len(return_types) > 1:
        return "tuple"
    return return_types[0]


# ---------------------------------------------------------------------------
# source helpers


def parse_src(src: str) -> tuple[int, int, int]:
    try:
        start, length, file_idx = (int(x) for x in src.split(":"))
    except (ValueError, AttributeError):
        return (-1, 0, -1)
    return start, length, file_idx


def slice_source(model: ContractModel, src: str) -> str | None:
    start, length, file_idx = parse_src(src)
    path = model.source_ids.get(file_idx)
    text = model.sources.get(path) if path is not None else None
    if text is None or start < 0:
        return None
    raw = text.encode("utf-8")[start : start + length]
    return raw.decode("utf-8", errors="replace")


def line_span(model: ContractModel, src: str) -> tuple[int, int] | None:
    start, length, file_idx = parse_src(src)
    path = model.source_ids.get(file_idx)
    text = model.sources.get(path) if path is not None else None
    if text is None or start < 0:
        return None
    raw = text.encode("utf-8")
    first = raw[:start].count(b"\n") + 1
    last = first + raw[start : start + length].count(b"\n")
    return first, last


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


# ---------------------------------------------------------------------------
# AST loading


def iter_nodes(node: Any) -> Iterator[dict]:
    """Pre-order walk over every dict node carrying a ``nodeType``."""
    stack = [node]
    while stack:
        cur = stack.pop()
        if isinstance(cur, dict):
            if "nodeType" in cur:
                yield cur
            children = [v for k, v in cur.items() if isinstance(v, (dict, list))]
            stack.extend(reversed(children))
        elif isinstance(cur, list):
            stack.extend(reversed(cur))


def _type_of(var: dict) -> str:
    ts = (var.get("typeDescriptions") or {}).get("typeString")
    if ts:
        return canonical_type(ts)
    tn = var.get("typeName") or {}
    return canonical_type(tn.get("name") or tn.get("typeDescriptions", {}).get("typeString", ""))


def _check_schema(unit: dict, compiler_version: str) -> None:
    if "nodeType" not in unit:
        if "children" in unit or "name" in unit:
            raise UnsupportedSchema("legacy AST format (pre-0.5 compiler or --ast-json)")
        raise MalformedAst("AST root has no nodeType")
    if unit["nodeType"] != "SourceUnit":
        raise MalformedAst(f"AST root is {unit['nodeType']}, expected SourceUnit")
    if compiler_version:
        m = re.match(r"v?0\.(\d+)\.", compiler_version)
        if m and int(m.group(1)) not in SUPPORTED_MINORS:
            raise UnsupportedSchema(f"compiler {compiler_version} outside 0.5.x-0.8.x")
    for node in unit.get("nodes", []):
        if node.get("nodeType") == "PragmaDirective":
            lits = node.get("literals") or []
            if lits and lits[0] == "solidity":
                expr = "".join(lits[1:])
                m = re.fullmatch(r"[\^~=]?0\.(\d+)(\.\d+)?", expr)
                if m and int(m.group(1)) not in SUPPORTED_MINORS:
                    raise UnsupportedSchema(f"pragma solidity {expr} outside 0.5.x-0.8.x")
    for node in iter_nodes(unit):
        if node["nodeType"] == "FunctionDefinition" and "kind" not in node:
            raise UnsupportedSchema("FunctionDefinition without 'kind' (pre-0.5 AST)")


def _collect_declarations(units: list[dict]) -> dict[int, DeclRef]:
    decls: dict[int, DeclRef] = {}
    for unit in units:
        for c in unit.get("nodes", []):
            if c.get("nodeType") != "ContractDefinition":
                continue
            cname = c["name"]
            decls[c["id"]] = DeclRef("contract", cname, contract_kind=c.get("contractKind", "contract"))
            for n in iter_nodes(c.get("nodes", [])):
                nt = n["nodeType"]
                if nt == "FunctionDefinition":
                    decls[n["id"]] = DeclRef(
                        "function",
                        _function_name(n),
                        cname,
                        len(n.get("parameters", {}).get("parameters", [])),
                        tuple(_type_of(p) for p in n.get("returnParameters", {}).get("parameters", [])),
                    )
                elif nt == "VariableDeclaration" and n.get("stateVariable"):
                    decls[n["id"]] = DeclRef("variable", n["name"], cname, 0, (_type_of(n),))
                elif nt in ("EventDefinition", "ErrorDefinition", "ModifierDefinition",
                            "StructDefinition", "EnumDefinition"):
                    kind = nt.replace("Definition", "").lower()
                    decls[n["id"]] = DeclRef(kind, n["name"], cname)
        for n in unit.get("nodes", []):
            nt = n.get("nodeType")
            if nt == "FunctionDefinition":  # free function
                decls[n["id"]] = DeclRef(
                    "function",
                    n["name"],
                    "",
                    len(n.get("parameters", {}).get("parameters", [])),
                    tuple(_type_of(p) for p in n.get("returnParameters", {}).get("parameters", [])),
                )
            elif nt in ("ErrorDefinition", "StructDefinition", "EnumDefinition"):
                decls[n["id"]] = DeclRef(nt.replace("Definition", "").lower(), n["name"])
    return decls


def _function_name(fn: dict) -> str:
    kind = fn.get("kind", "function")
    if kind in ("constructor", "fallback", "receive"):
        return kind
    return fn.get("name") or kind


def _render_invocation(model: ContractModel, inv: dict) -> str:
    text = slice_source(model, inv.get("src", ""))
    if text is not None:
        return normalize_ws(text)
    from scrs.features.render import render_expr

    name = (inv.get("modifierName") or {}).get("name") or (inv.get("modifierName") or {}).get("namePath", "")
    args = inv.get("arguments")
    if args:
        return f"{name}({','.join(render_expr(a) for a in args)})"
    return name


def _base_name(spec: dict) -> str:
    bn = spec.get("baseName") or {}
    return bn.get("name") or bn.get("namePath") or ""


def _build_contract(
    model: ContractModel, node: dict, path: str, hints: dict[int, tuple[list[int], bool]]
) -> ContractDecl:
    decls = model.declarations
    kind = node.get("contractKind", "contract")
    bases = [_base_name(b) for b in node.get("baseContracts", [])]
    contract = ContractDecl(
        name=node["name"],
        is_interface=kind == "interface",
        bases=bases,
        functions=[],
        kind=kind,
        abstract=bool(node.get("abstract", False)),
        source_path=path,
        src=node.get("src", ""),
        ast_id=node.get("id"),
    )
    for fn in node.get("nodes", []):
        if fn.get("nodeType") != "FunctionDefinition":
            continue
        params = [(p.get("name", ""), _type_of(p)) for p in fn.get("parameters", {}).get("parameters", [])]
        returns = [_type_of(p) for p in fn.get("returnParameters", {}).get("parameters", [])]
        modifiers: list[tuple[str, str]] = []
        base_calls: list[tuple[str, int]] = []
        for inv in fn.get("modifiers", []):
            mname = (inv.get("modifierName") or {}).get("name") or (inv.get("modifierName") or {}).get("namePath", "")
            ref = decls.get((inv.get("modifierName") or {}).get("referencedDeclaration", -1))
            is_base = inv.get("kind") == "baseConstructorSpecifier" or (ref is not None and ref.kind == "contract")
            if is_base:
                base_calls.append((mname, len(inv.get("arguments") or [])))
            else:
                modifiers.append((mname, _render_invocation(model, inv)))
        body = fn.get("body")
        contract.functions.append(
            FunctionDecl(
                name=_function_name(fn),
                params=params,
                return_types=returns,
                modifiers=modifiers,
                body_nodes=list(body.get("statements", [])) if body else None,
                kind=fn.get("kind", "function"),
                visibility=fn.get("visibility", ""),
                base_constructor_calls=base_calls,
                src=fn.get("src", ""),
                ast_id=fn.get("id"),
            )
        )
        hints[id(contract.functions[-1])] = (list(fn.get("baseFunctions") or []), fn.get("overrides") is not None)
    return contract


def _resolve_overrides(model: ContractModel, hints: dict[int, tuple[list[int], bool]]) -> None:
    for contract in model.contracts:
        lineage = model.transitive_bases(contract.name)
        for fn in contract.functions:
            base_ids, has_spec = hints.get(id(fn), ([], False))
            if fn.kind == "constructor":
                continue
            target = None
            for bid in base_ids:
                ref = model.declarations.get(bid)
                if ref is not None and ref.kind == "function" and ref.owner:
                    target = (ref.owner, ref.name)
                    break
            if target is None:
                for base in lineage:
                    bdecl = model.contract(base)
                    if bdecl is not None and bdecl.function(fn.name, fn.arity) is not None:
                        target = (base, fn.name)
                        break
            if target is not None:
                fn.overrides = target
            elif base_ids or has_spec:
                fn.overrides = ("?", fn.name)
                fn.overrides_resolved = False


def _coerce_document(document: Any) -> dict:
    if isinstance(document, (bytes, bytearray)):
        document = document.decode("utf-8", errors="replace")
    if isinstance(document, str):
        if not document.strip():
            raise MalformedAst("empty AST document")
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise MalformedAst(f"AST document is not JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise MalformedAst("AST document must be a JSON object")
    return document


def load_contract_ast(document: Any) -> ContractModel:
    """Build a :class:`ContractModel` from a standard-JSON output or a SourceUnit."""
    doc = _coerce_document(document)
    extra = doc.get("x-scrs") or {}
    model = ContractModel(
        sources=dict(extra.get("sources") or {}),
        primary_sources=list(extra.get("primary") or []),
        compiler_version=str(extra.get("compiler") or ""),
    )
    units: list[tuple[str, dict]] = []
    if doc.get("nodeType") == "SourceUnit" or ("children" in doc and "sources" not in doc):
        path = doc.get("absolutePath", "<input>")
        units.append((path, doc))
        model.source_ids[0] = path
    elif "sources" in doc:
        for path in sorted(doc["sources"], key=lambda p: (doc["sources"][p].get("id", 0), p)):
            entry = doc["sources"][path]
            ast = entry.get("ast") if isinstance(entry, dict) else None
            if not isinstance(ast, dict):
                raise MalformedAst(f"source {path} carries no AST")
            units.append((path, ast))
            model.source_ids[int(entry.get("id", len(model.source_ids)))] = path
    else:
        errors = [e.get("formattedMessage", e.get("message", "")) for e in doc.get("errors", [])]
        raise MalformedAst("document has neither 'sources' nor a SourceUnit root" + (f": {errors}" if errors else ""))

    for _, unit in units:
        _check_schema(unit, model.compiler_version)
    model.declarations = _collect_declarations([u for _, u in units])
    hints: dict[int, tuple[list[int], bool]] = {}
    for path, unit in units:
        for node in unit.get("nodes", []):
            if node.get("nodeType") == "ContractDefinition":
                model.contracts.append(_build_contract(model, node, path, hints))
    _resolve_overrides(model, hints)
    return model
