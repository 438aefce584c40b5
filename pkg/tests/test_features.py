import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scrs.errors import CompilationFailed, MalformedAst, UnsupportedSchema
from scrs.features import (
    CompositeSignature,
    ConstraintKind,
    LogicalSequence,
    UsageGroup,
    UsageKind,
    extract_embedding,
    extract_signature,
    load_contract_ast,
)
from scrs.features.compiler import collect_sources, compile_file, pragma_allows, source_digest
from scrs.features.compress import RETURN_CLASSES
from scrs.features.model import FunctionDecl, line_span

from conftest import CONTRACTS, SCRS, SNIPPETS, features_of


def snippet(name):
    return features_of(str(SNIPPETS / f"{name}.sol"))


def fixture(name):
    return features_of(str(CONTRACTS / f"{name}.sol"))


def steps(seq: LogicalSequence):
    return [(s.kind.value, s.condition_text) for s in seq.steps]


# -- AST model ---------------------------------------------------------------


def test_swap_model_has_swap_function():
    model = fixture("swap_zero_min").model
    simple = model.contract("SimpleContract")
    assert simple is not None
    assert simple.function("swapTokensForCurrency") is not None


def test_capped_model_lists_capped_base():
    model = fixture("capped_bypass").model
    assert "ERC20Capped" in model.contract("SimpleToken").bases
    assert "ERC20" in model.transitive_bases("SimpleToken")


def test_empty_source_unit_has_no_contracts():
    assert snippet("Empty").model.contracts == []


def test_function_names_unique_up_to_arity():
    for name in ("Arith", "Calls", "Guarded", "Plain"):
        for c in snippet(name).model.contracts:
            keys = [(f.name, f.arity) for f in c.functions]
            assert len(keys) == len(set(keys))


@pytest.mark.parametrize("doc, error", [
    ("", MalformedAst),
    ("not json", MalformedAst),
    ({"nodeType": "ContractDefinition"}, MalformedAst),
    ({"children": [], "name": "SourceUnit"}, UnsupportedSchema),
    ({"nodeType": "SourceUnit", "nodes": [
        {"nodeType": "PragmaDirective", "literals": ["solidity", "^", "0.4", ".24"]}]}, UnsupportedSchema),
])
def test_bad_ast_documents(doc, error):
    with pytest.raises(error):
        load_contract_ast(doc if isinstance(doc, str) else json.dumps(doc))


def test_model_serializes_to_json():
    d = fixture("swap_zero_min").model.to_dict()
    assert json.loads(json.dumps(d))["contracts"][-1]["name"] == "SimpleContract"


# -- composite graph -----------------------------------------------------------


def test_return_sum_cfg_counts():
    g = snippet("Arith").graph
    assert g.cfg_per_function["Arith.add/2"].kind_counts() == {
        "entry": 1, "variable": 0, "expression": 1, "conditional": 0, "loop": 0, "return": 1}


def test_empty_body_cfg_is_entry_only():
    cfg = snippet("Arith").graph.cfg_per_function["Arith.noop/0"]
    counts = cfg.kind_counts()
    assert counts["entry"] == 1 and sum(counts.values()) == 1


def test_cfg_single_entry_and_reachable():
    import networkx as nx

    for name in ("Arith", "Calls", "Guarded", "Plain"):
        for fid, cfg in snippet(name).graph.cfg_per_function.items():
            d = cfg.to_dict()
            entries = [n for n in d["nodes"] if n["kind"] == "entry"]
            if not entries:
                assert d["nodes"] == []  # bodiless declaration
                continue
            assert len(entries) == 1
            g = nx.DiGraph()
            g.add_nodes_from(n["id"] for n in d["nodes"])
            g.add_edges_from((e[0], e[1]) for e in d["edges"])
            assert set(nx.descendants(g, entries[0]["id"])) | {entries[0]["id"]} == set(g.nodes), fid


def _resolution_oracle(model, caller_contract, callee_name):
    """Brute force over the declaration table: internal when the caller's contract
    (or a base) declares the name, external when only another contract does."""
    own = [caller_contract] + model.transitive_bases(caller_contract)
    for c in model.contracts:
        if any(f.name == callee_name for f in c.functions):
            if c.name in own:
                return "internal"
    return "external"


def test_pcg_internal_and_external_edges():
    f = snippet("Calls")
    edges = {(a, b): d["label"] for a, b, d in f.graph.pcg.edges(data=True)}
    assert edges == {("Calls.f/0", "Calls.g/0"): "internal", ("Calls.f/0", "IOther.h/0"): "external"}
    for (a, b), label in edges.items():
        assert label == _resolution_oracle(f.model, a.split(".")[0], b.split(".")[1].split("/")[0])


def test_pcg_endpoints_exist_in_model():
    for name in ("Calls", "Guarded", "Plain"):
        f = snippet(name)
        for a, b in f.graph.pcg.edges():
            assert a in f.graph.functions and b in f.graph.functions


# -- signatures ----------------------------------------------------------------


def test_reference_signature_rendering():
    fn = FunctionDecl("getReserves", [("factory", "address"), ("tokenA", "address"), ("tokenB", "address")],
                      ["uint256"], [], [])
    sig = extract_signature(fn, "UniswapV2Library")
    assert sig.items() == ("UniswapV2Library", "getReserves", "3", "uint256")
    assert sig.render() == "UniswapV2Library-getReserves-3-uint256"


def test_parameterless_void_signature():
    fn = FunctionDecl("f", [], [], [], [])
    assert extract_signature(fn, "C").render() == "C-f-0-void"


def test_multi_return_is_tuple():
    c = snippet("Arith").model.contract("Arith")
    sig = extract_signature(c.function("pair"), c)
    assert sig.return_type == "tuple"
    assert CompositeSignature.parse(sig.render()) == sig


def test_hyphens_are_sanitized():
    sig = CompositeSignature("My-Lib", "do-it", 1, "uint256")
    assert sig.render() == "My_Lib-do_it-1-uint256"
    assert sig.render().count("-") == 3


_name = st.text(alphabet=st.characters(whitelist_categories=("Lu", "Ll", "Nd"), whitelist_characters="_$"),
                min_size=1, max_size=24)


@settings(max_examples=300, deadline=None)
@given(_name, _name, st.integers(0, 64), st.sampled_from(["void", "bool", "uint256", "int8", "address",
                                                         "bytes32", "string", "tuple", "other"]))
def test_signature_round_trip(c, f, n, r):
    sig = CompositeSignature(c, f, n, r)
    assert CompositeSignature.parse(sig.render()) == sig


# -- logical sequences ---------------------------------------------------------


def _guarded_usage(function):
    return next(u for u in snippet("Guarded").usages if u.site.function == function)


def test_require_guard_sequence():
    assert steps(_guarded_usage("pay").sequence) == [("Require", "amount > 0")]


def test_unguarded_call_has_empty_sequence():
    assert steps(_guarded_usage("bare").sequence) == []


def test_modifier_if_revert_sequence():
    assert steps(_guarded_usage("run").sequence) == [("Modifier", "onlyOwner"), ("If", "paused"), ("Revert", "")]


def test_condition_text_required_except_revert():
    for u in snippet("Guarded").usages:
        for s in u.sequence.steps:
            if s.kind is not ConstraintKind.REVERT:
                assert s.condition_text


# -- embeddings ------------------------------------------------------------------


def test_embedding_of_return_sum():
    f = snippet("Arith")
    c, fn = f.graph.functions["Arith.add/2"]
    e = extract_embedding(fn, f.graph, "Arith.add/2")
    assert e.cfg_attrs == (1, 0, 1, 0, 0, 1)
    assert e.param_count == 2 and e.return_class_name() == "uint"


def test_identical_functions_identical_embeddings():
    a = features_of(str(SCRS / "ERC20Capped.sol"))
    b = features_of(str(SCRS / "ERC20Capped.sol"))
    fid = "ERC20Capped._mint/2"
    assert extract_embedding(a.graph.functions[fid][1], a.graph, fid) == \
        extract_embedding(b.graph.functions[fid][1], b.graph, fid)


def test_interface_embedding_is_bodiless():
    f = features_of(str(CONTRACTS / "ISwapRouter.sol"))
    fn = f.graph.functions["ISwapRouter.swap/4"][1]
    e = extract_embedding(fn, f.graph, "ISwapRouter.swap/4")
    assert e.node_count == 0 and e.cfg_attrs == (0,) * 6
    assert e.param_count == 4 and e.return_class_name() == "uint"


def test_embedding_invariants():
    for name in ("Arith", "Calls", "Guarded", "Plain"):
        f = snippet(name)
        for fid, (c, fn) in f.graph.functions.items():
            e = extract_embedding(fn, f.graph, fid)
            assert min(e.numeric_vector()) >= 0 and min(e.cfg_attrs) >= 0
            assert sum(e.return_class) == 1 and len(e.return_class) == len(RETURN_CLASSES)
            if fn.has_body:
                assert e.cfg_attrs[0] == 1


# -- usage detection -------------------------------------------------------------


def test_swap_zero_min_call_usage():
    (u,) = fixture("swap_zero_min").usages
    assert u.kind is UsageKind.CALL and u.group is UsageGroup.G_T
    assert u.signature.function_name == "swap" and u.signature.param_count == 4
    assert u.site.lines == (11, 11)


def test_capped_inherit_usage():
    (u,) = fixture("capped_bypass").usages
    assert u.kind is UsageKind.INHERIT and u.group is UsageGroup.G_O
    assert u.signature.contract_name == "ERC20Capped"
    assert u.related_calls == ("ERC20._mint",)


def test_benign_twin_routes_through_capped_mint():
    (u,) = fixture("capped_guarded").usages
    assert u.related_calls == ("ERC20Capped._mint",)


def test_no_bases_internal_calls_only():
    assert snippet("Plain").usages == []


def test_group_is_function_of_kind():
    for name in ("swap_zero_min", "capped_bypass"):
        for u in fixture(name).usages:
            assert u.group is (UsageGroup.G_T if u.kind is UsageKind.CALL else UsageGroup.G_O)


# -- compiler helpers ---------------------------------------------------------------


@pytest.mark.parametrize("pragma, version, ok", [
    ("^0.8.0", "0.8.24", True),
    ("^0.8.0", "0.9.0", False),
    ("~0.8.20", "0.8.24", True),
    ("~0.8.20", "0.9.1", False),
    (">=0.6.0 <0.8.0", "0.7.6", True),
    (">=0.6.0 <0.8.0", "0.8.0", False),
    ("0.8.24", "0.8.24", True),
    ("0.5.0 - 0.6.12", "0.6.3", True),
    ("^0.4.24 || ^0.8.0", "0.8.1", True),
])
def test_pragma_allows(pragma, version, ok):
    assert pragma_allows(pragma, version) is ok


def test_relative_imports_are_collected():
    primary, sources = collect_sources(CONTRACTS / "capped_bypass.sol")
    assert primary == "capped_bypass.sol"
    assert "scrs/ERC20Capped.sol" in sources and "scrs/ERC20.sol" in sources


def test_cache_is_used_without_compiler():
    doc = compile_file(CONTRACTS / "swap_zero_min.sol")
    _, sources = collect_sources(CONTRACTS / "swap_zero_min.sol")
    assert doc["x-scrs"]["digest"] == source_digest(sources)


def test_stale_cache_without_compiler_fails(tmp_path):
    src = (SNIPPETS / "Plain.sol").read_text()
    (tmp_path / "Plain.sol").write_text(src + "\n// edited\n")
    (tmp_path / "Plain.sol.ast.json").write_text((SNIPPETS / "Plain.sol.ast.json").read_text())
    with pytest.raises(CompilationFailed):
        compile_file(tmp_path / "Plain.sol")


def test_line_span_of_usage_site():
    f = fixture("swap_zero_min")
    (u,) = f.usages
    assert line_span(f.model, u.site.src) == (11, 11)
