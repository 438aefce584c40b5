"""Compact Solidity expression rendering from AST nodes.

Only used when the AST document does not carry its source text; the output
is canonical (no whitespace around operators) rather than verbatim.
"""

from __future__ import annotations


def render_expr(node: dict | None) -> str:
    if not node:
        return ""
    nt = node.get("nodeType")
    if nt == "Identifier":
        return node.get("name", "")
    if nt == "Literal":
        value = node.get("value")
        if node.get("kind") in ("string", "unicodeString"):
            return '"' + (value or "") + '"'
        if value is None:
            return node.get("hexValue", "")
        return value + (" " + node["subdenomination"] if node.get("subdenomination") else "")
    if nt == "BinaryOperation":
        left, right = render_expr(node.get("leftExpression")), render_expr(node.get("rightExpression"))
        return f"{left}{node.get('operator', '?')}{right}"
    if nt == "UnaryOperation":
        op = node.get("operator", "")
        inner = render_expr(node.get("subExpression"))
        sep = " " if op == "delete" else ""
        return f"{op}{sep}{inner}" if node.get("prefix", True) else f"{inner}{op}"
    if nt == "Assignment":
        left, right = render_expr(node.get("leftHandSide")), render_expr(node.get("rightHandSide"))
        return f"{left}{node.get('operator', '=')}{right}"
    if nt == "MemberAccess":
        return f"{render_expr(node.get('expression'))}.{node.get('memberName', '')}"
    if nt == "IndexAccess":
        return f"{render_expr(node.get('baseExpression'))}[{render_expr(node.get('indexExpression'))}]"
    if nt == "IndexRangeAccess":
        return (
            f"{render_expr(node.get('baseExpression'))}"
            f"[{render_expr(node.get('startExpression'))}:{render_expr(node.get('endExpression'))}]"
        )
    if nt == "FunctionCall":
        args = ",".join(render_expr(a) for a in node.get("arguments", []))
        return f"{render_expr(node.get('expression'))}({args})"
    if nt == "FunctionCallOptions":
        opts = ",".join(
            f"{n}:{render_expr(v)}" for n, v in zip(node.get("names", []), node.get("options", []))
        )
        return f"{render_expr(node.get('expression'))}{{{opts}}}"
    if nt == "TupleExpression":
        parts = ",".join(render_expr(c) for c in node.get("components", []))
        return f"[{parts}]" if node.get("isInlineArray") else f"({parts})"
    if nt == "Conditional":
        return (
            f"{render_expr(node.get('condition'))}?{render_expr(node.get('trueExpression'))}"
            f":{render_expr(node.get('falseExpression'))}"
        )
    if nt == "ElementaryTypeNameExpression":
        tn = node.get("typeName")
        return tn.get("name", "") if isinstance(tn, dict) else str(tn or "")
    if nt == "NewExpression":
        tn = node.get("typeName") or {}
        return "new " + (tn.get("name") or (tn.get("typeDescriptions") or {}).get("typeString", ""))
    return nt or ""
