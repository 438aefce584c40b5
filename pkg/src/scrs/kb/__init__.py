"""Component knowledge base: ingestion, analysis agent, records."""

from scrs.kb.agent import SubTask, SubTaskKind, build_records, extract_usage_knowledge, plan_tasks, process_unit
from scrs.kb.plugins import PLUGINS, PluginContext, PluginResult, invoke_plugin
from scrs.kb.records import (
    ConstraintClass,
    KnowledgeBase,
    ParamConstraint,
    ReturnCheck,
    ScrRecord,
    UsageKnowledge,
    load_kb,
    store_kb,
)
from scrs.kb.sources import Origin, ScrSourceUnit, SkippedSource, ingest_sources

__all__ = [
    "PLUGINS",
    "ConstraintClass",
    "KnowledgeBase",
    "Origin",
    "ParamConstraint",
    "PluginContext",
    "PluginResult",
    "ReturnCheck",
    "ScrRecord",
    "ScrSourceUnit",
    "SkippedSource",
    "SubTask",
    "SubTaskKind",
    "UsageKnowledge",
    "build_records",
    "extract_usage_knowledge",
    "ingest_sources",
    "invoke_plugin",
    "load_kb",
    "plan_tasks",
    "process_unit",
    "store_kb",
]
