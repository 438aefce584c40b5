"""Everything extracted from one compiled contract file, plus its JSON form."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from scrs.features.compiler import compile_file
from scrs.features.compress import ScrUsage, detect_scr_usages
from scrs.features.graph import CompositeGraph, build_composite_graph
from scrs.features.model import ContractModel, load_contract_ast, slice_source


@dataclass
class ContractFeatures:
    name: str
    model: ContractModel
    graph: CompositeGraph = field(repr=False)
    usages: list[ScrUsage]

    def primary_source(self) -> str:
        texts = [self.model.sources.get(p, "") for p in self.model.primary_sources]
        return "\n".join(t for t in texts if t)

    def contract_source(self, contract: str) -> str:
        decl = self.model.contract(contract)
        if decl is None:
            return ""
        return slice_source(self.model, decl.src) or ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "contracts": [c.name for c in self.model.primary_contracts()],
            "model": self.model.to_dict(),
            "graph": self.graph.to_dict(),
            "usages": [u.to_dict() for u in self.usages],
        }


def features_from_model(name: str, model: ContractModel) -> ContractFeatures:
    graph = build_composite_graph(model)
    return ContractFeatures(name, model, graph, detect_scr_usages(model, graph))


def extract_features(path: str | Path, compiler: str | None = None) -> ContractFeatures:
    """Compile (or load the cached AST of) a ``.sol`` file, or read an AST JSON document."""
    path = Path(path)
    if path.suffix == ".json":
        model = load_contract_ast(path.read_bytes())
    else:
        model = load_contract_ast(compile_file(path, compiler))
    return features_from_model(path.name, model)
