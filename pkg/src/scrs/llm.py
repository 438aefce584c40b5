"""Chat-completion backends: live OpenAI-compatible HTTP and digest-keyed replay."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Callable, Mapping, Protocol

import httpx

from scrs.errors import BackendUnavailable, FixtureMiss, IoFailure, RateLimited, SchemaMismatch
from scrs.io import atomic_write_text

logger = logging.getLogger(__name__)

API_KEY_ENV = "SCRS_API_KEY"


def request_digest(stage_tag: str, system_text: str, user_text: str) -> str:
    payload = json.dumps([stage_tag, system_text, user_text], ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CompletionRequest:
    stage_tag: str
    system_text: str
    user_text: str
    temperature: float = 0.0
    max_tokens: int = 1024

    def __post_init__(self):
        if not self.user_text:
            raise ValueError("user_text must be non-empty")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")

    @property
    def digest(self) -> str:
        return request_digest(self.stage_tag, self.system_text, self.user_text)


class Backend(Protocol):
    def complete(self, request: CompletionRequest) -> str: ...


def complete(request: CompletionRequest, backend: Backend) -> str:
    return backend.complete(request)


# -- replay -----------------------------------------------------------------


@dataclass(frozen=True)
class FixtureStore:
    fixtures: Mapping[str, str] = field(default_factory=dict)
    path: Path | None = None

    def __post_init__(self):
        object.__setattr__(self, "fixtures", MappingProxyType(dict(self.fixtures)))

    def __len__(self) -> int:
        return len(self.fixtures)

    def __contains__(self, digest: str) -> bool:
        return digest in self.fixtures

    def get(self, digest: str) -> str | None:
        return self.fixtures.get(digest)

    @classmethod
    def load(cls, path: str | Path) -> "FixtureStore":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return cls({}, path)
        except OSError as exc:
            raise IoFailure(f"cannot read fixture store {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise SchemaMismatch(f"fixture store {path} is not JSON: {exc}") from exc
        if not isinstance(data, dict) or not all(isinstance(v, str) for v in data.values()):
            raise SchemaMismatch(f"fixture store {path} must map digests to response text")
        return cls(data, path)

    def save(self, path: str | Path | None = None) -> None:
        target = Path(path or self.path)
        atomic_write_text(target, json.dumps(dict(self.fixtures), indent=1, sort_keys=True, ensure_ascii=False) + "\n")


_record_lock = threading.Lock()


def record_fixture(request: CompletionRequest, response: str, store_path: str | Path) -> FixtureStore:
    """Add one digest to a store file; an existing digest is overwritten with a warning."""
    if not response or not response.strip():
        raise ValueError("refusing to record an empty response as a fixture")
    with _record_lock:
        store = FixtureStore.load(store_path)
        data = dict(store.fixtures)
        digest = request.digest
        if digest in data and data[digest] != response:
            logger.warning("overwriting fixture %s (stage %s)", digest, request.stage_tag)
        elif digest in data:
            logger.warning("re-recording fixture %s (stage %s)", digest, request.stage_tag)
        data[digest] = response
        updated = FixtureStore(data, Path(store_path))
        updated.save()
    return updated


class ReplayBackend:
    """Returns the stored text for a request digest."""

    def __init__(self, store: FixtureStore, strict: bool = True, fallback: str = ""):
        self.store = store
        self.strict = strict
        self.fallback = fallback

    @classmethod
    def from_path(cls, path: str | Path, strict: bool = True) -> "ReplayBackend":
        path = Path(path)
        if not path.is_file():
            raise IoFailure(f"fixture store {path} does not exist")
        return cls(FixtureStore.load(path), strict)

    def complete(self, request: CompletionRequest) -> str:
        text = self.store.get(request.digest)
        if text is None:
            if self.strict:
                raise FixtureMiss(request.digest, request.stage_tag)
            logger.warning("replay miss for %s (%s)", request.digest, request.stage_tag)
            return self.fallback
        return text


class ScriptedBackend:
    """Answers from a Python callable; used to author replay fixtures and in tests."""

    def __init__(self, responder: Callable[[CompletionRequest], str]):
        self.responder = responder
        self.requests: list[CompletionRequest] = []
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> str:
        with self._lock:
            self.requests.append(request)
        return self.responder(request)


class RecordingBackend:
    """Wraps another backend and collects every exchange for a fixture store."""

    def __init__(self, inner: Backend):
        self.inner = inner
        self.recorded: dict[str, str] = {}
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> str:
        text = self.inner.complete(request)
        if text.strip():
            with self._lock:
                self.recorded[request.digest] = text
        return text

    def store(self, path: str | Path | None = None) -> FixtureStore:
        return FixtureStore(dict(sorted(self.recorded.items())), Path(path) if path else None)


# -- live -------------------------------------------------------------------


class HttpBackend:
    """OpenAI-compatible ``/chat/completions`` client with bounded retries."""

    def __init__(self, base_url: str, model: str, api_key: str | None = None, *,
                 timeout: float = 120.0, max_retries: int = 3, backoff: float = 1.0,
                 max_concurrent_requests: int = 4, transport: httpx.BaseTransport | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        if not base_url or not model:
            raise ValueError("the HTTP backend needs a base URL and a model name")
        self.model = model
        self.max_retries = max(1, max_retries)
        self.backoff = backoff
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(max(1, max_concurrent_requests))
        key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        self._client = httpx.Client(base_url=base_url.rstrip("/"), headers=headers,
                                    timeout=timeout, transport=transport)

    def close(self) -> None:
        self._client.close()

    def _payload(self, request: CompletionRequest) -> dict:
        messages = []
        if request.system_text:
            messages.append({"role": "system", "content": request.system_text})
        messages.append({"role": "user", "content": request.user_text})
        return {"model": self.model, "messages": messages,
                "temperature": request.temperature, "max_tokens": request.max_tokens}

    @staticmethod
    def _retry_after(resp: httpx.Response) -> float | None:
        value = resp.headers.get("retry-after")
        try:
            return float(value) if value is not None else None
        except ValueError:
            return None

    def complete(self, request: CompletionRequest) -> str:
        payload = self._payload(request)
        last_error: str = ""
        with self._slots:
            for attempt in range(self.max_retries):
                delay = self.backoff * (2 ** attempt)
                try:
                    resp = self._client.post("/chat/completions", json=payload)
                except httpx.TransportError as exc:
                    last_error = f"{type(exc).__name__}: {exc}"
                else:
                    if resp.status_code == 429:
                        retry_after = self._retry_after(resp)
                        if attempt == self.max_retries - 1:
                            raise RateLimited(retry_after)
                        delay = max(delay, retry_after or 0.0)
                        last_error = "HTTP 429"
                    elif resp.status_code >= 500:
                        last_error = f"HTTP {resp.status_code}"
                    elif resp.status_code >= 400:
                        raise BackendUnavailable(f"HTTP {resp.status_code}: {resp.text[:200]}")
                    else:
                        try:
                            return resp.json()["choices"][0]["message"]["content"] or ""
                        except (ValueError, KeyError, IndexError, TypeError) as exc:
                            raise BackendUnavailable(f"unexpected completion payload: {exc}") from exc
                if attempt < self.max_retries - 1:
                    logger.info("retrying %s after %s (%.1fs)", request.stage_tag, last_error, delay)
                    self._sleep(delay)
        raise BackendUnavailable(f"completion failed after {self.max_retries} attempts: {last_error}")


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "replay"
    fixture_path: str | None = None
    strict: bool = True
    base_url: str | None = None
    model: str | None = None
    max_concurrent_requests: int = 4
    timeout: float = 120.0
    max_retries: int = 3


def make_backend(config: BackendConfig) -> Backend:
    if config.kind == "replay":
        if not config.fixture_path:
            raise ValueError("the replay backend needs a fixture path")
        return ReplayBackend.from_path(config.fixture_path, config.strict)
    if config.kind == "http":
        return HttpBackend(config.base_url or "", config.model or "", timeout=config.timeout,
                           max_retries=config.max_retries,
                           max_concurrent_requests=config.max_concurrent_requests)
    raise ValueError(f"unknown backend {config.kind!r}")
