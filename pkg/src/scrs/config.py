"""Run configuration: one JSON document, overridable from the command line."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from scrs.engine.similarity import CheckerParams
from scrs.errors import IoFailure, SchemaMismatch
from scrs.llm import BackendConfig


@dataclass
class RunConfig:
    kb_path: str | None = None
    weights_mode: str = "default"
    checker: CheckerParams = field(default_factory=CheckerParams)
    backend: str = "replay"
    fixture_path: str | None = None
    strict_replay: bool = True
    base_url: str | None = None
    model: str | None = None
    compiler_path: str | None = None
    output_path: str | None = None
    max_concurrent_requests: int = 4
    workers: int = 4

    def validate(self) -> None:
        if self.backend == "replay" and not self.fixture_path:
            raise ValueError("the replay backend requires a fixture path (--fixtures)")
        if self.backend == "http" and not (self.base_url and self.model):
            raise ValueError("the http backend requires --base-url and --model")
        if self.backend not in ("replay", "http"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if not (self.weights_mode in ("infer", "default") or self.weights_mode.startswith("file:")):
            raise ValueError(f"--weights must be infer, default or file:PATH, not {self.weights_mode!r}")
        if self.max_concurrent_requests < 1 or self.workers < 1:
            raise ValueError("concurrency settings must be positive")

    def backend_config(self) -> BackendConfig:
        return BackendConfig(kind=self.backend, fixture_path=self.fixture_path, strict=self.strict_replay,
                             base_url=self.base_url, model=self.model,
                             max_concurrent_requests=self.max_concurrent_requests)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["checker"] = self.checker.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise SchemaMismatch(f"unknown configuration keys: {', '.join(unknown)}")
        values = dict(d)
        if "checker" in values:
            values["checker"] = CheckerParams.from_dict(values["checker"])
        return cls(**values)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise IoFailure(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise SchemaMismatch(f"config {path} is not JSON: {exc}") from exc
        return cls.from_dict(data)

    def merged(self, overrides: dict) -> "RunConfig":
        """Copy with every non-None override applied; ``checker`` overrides merge key-wise."""
        d = self.to_dict()
        for k, v in overrides.items():
            if v is None:
                continue
            if k == "checker":
                d["checker"] = {**d["checker"], **{a: b for a, b in v.items() if b is not None}}
            else:
                d[k] = v
        return RunConfig.from_dict(d)
