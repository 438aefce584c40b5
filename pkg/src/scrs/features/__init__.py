"""Contract feature extraction: AST model, composite graph, compressed representations."""

from scrs.features.compress import (
    CompositeSignature,
    ConstraintKind,
    LogicalConstraint,
    LogicalSequence,
    ScrUsage,
    StructuralEmbedding,
    UsageGroup,
    UsageKind,
    UsageSite,
    detect_scr_usages,
    extract_embedding,
    extract_logical_sequence,
    extract_signature,
)
from scrs.features.graph import CompositeGraph, build_composite_graph
from scrs.features.model import ContractDecl, ContractModel, FunctionDecl, load_contract_ast

__all__ = [
    "CompositeGraph",
    "CompositeSignature",
    "ConstraintKind",
    "ContractDecl",
    "ContractModel",
    "FunctionDecl",
    "LogicalConstraint",
    "LogicalSequence",
    "ScrUsage",
    "StructuralEmbedding",
    "UsageGroup",
    "UsageKind",
    "UsageSite",
    "build_composite_graph",
    "detect_scr_usages",
    "extract_embedding",
    "extract_logical_sequence",
    "extract_signature",
    "load_contract_ast",
]
