"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class ScrsError(Exception):
    """Base class for all pipeline errors."""


# feature extraction
class MalformedAst(ScrsError):
    pass


class UnsupportedSchema(ScrsError):
    pass


class CompilationFailed(ScrsError):
    pass


# knowledge base
class NoSources(ScrsError):
    pass


class UnknownPlugin(ScrsError):
    pass


class PluginFailure(ScrsError):
    """A tool plugin raised; ``prompt`` holds the exception_parsing rendering."""

    def __init__(self, plugin_id: str, cause: BaseException, prompt: str = ""):
        super().__init__(f"plugin {plugin_id} failed: {cause}")
        self.plugin_id = plugin_id
        self.cause = cause
        self.prompt = prompt


class IoFailure(ScrsError):
    pass


class SchemaMismatch(ScrsError):
    pass


# retrieval
class EmptyKb(ScrsError):
    pass


class SingleRecord(ScrsError):
    pass


# llm
class BackendUnavailable(ScrsError):
    pass


class FixtureMiss(ScrsError):
    def __init__(self, digest: str, stage_tag: str = ""):
        super().__init__(f"no replay fixture for digest {digest} (stage {stage_tag or '?'})")
        self.digest = digest
        self.stage_tag = stage_tag


class RateLimited(ScrsError):
    def __init__(self, retry_after: float | None):
        super().__init__(f"rate limited (retry after {retry_after}s)")
        self.retry_after = retry_after


class StructureViolation(ScrsError):
    pass


# inspector / engine
class FieldNotAllowed(ScrsError):
    pass


class UnknownSnapshotId(ScrsError):
    pass


class EmptyFixtureSet(ScrsError):
    pass
