import json
import logging
import threading

import httpx
import pytest

from scrs.errors import BackendUnavailable, FixtureMiss, IoFailure, RateLimited
from scrs.llm import (
    BackendConfig,
    CompletionRequest,
    FixtureStore,
    HttpBackend,
    RecordingBackend,
    ReplayBackend,
    ScriptedBackend,
    make_backend,
    record_fixture,
    request_digest,
)

REQ = CompletionRequest("luv/T2/x", "system", "user text")


def test_digest_is_stable_and_tag_sensitive():
    assert REQ.digest == request_digest("luv/T2/x", "system", "user text")
    assert REQ.digest != CompletionRequest("luv/T3/x", "system", "user text").digest
    assert len(REQ.digest) == 64


def test_request_validation():
    with pytest.raises(ValueError):
        CompletionRequest("t", "s", "")
    with pytest.raises(ValueError):
        CompletionRequest("t", "s", "u", max_tokens=0)


def test_replay_returns_stored_text():
    text = 'resp {"verdict": "Yes"}\n'
    backend = ReplayBackend(FixtureStore({REQ.digest: text}))
    assert backend.complete(REQ) == text
    assert backend.complete(REQ) == backend.complete(REQ)


def test_strict_miss_names_digest():
    with pytest.raises(FixtureMiss) as info:
        ReplayBackend(FixtureStore({})).complete(REQ)
    assert REQ.digest in str(info.value)


def test_lenient_miss_returns_fallback():
    assert ReplayBackend(FixtureStore({}), strict=False, fallback="x").complete(REQ) == "x"


def test_missing_store_file(tmp_path):
    with pytest.raises(IoFailure):
        ReplayBackend.from_path(tmp_path / "nope.json")


def test_record_then_replay(tmp_path):
    path = tmp_path / "store.json"
    record_fixture(REQ, "first", path)
    assert ReplayBackend.from_path(path).complete(REQ) == "first"


def test_overwrite_warns_and_wins(tmp_path, caplog):
    path = tmp_path / "store.json"
    record_fixture(REQ, "first", path)
    with caplog.at_level(logging.WARNING, logger="scrs.llm"):
        record_fixture(REQ, "second", path)
    assert "overwriting" in caplog.text
    assert FixtureStore.load(path).get(REQ.digest) == "second"


def test_empty_response_is_refused(tmp_path):
    with pytest.raises(ValueError):
        record_fixture(REQ, "  ", tmp_path / "store.json")


def test_recording_backend(tmp_path):
    rec = RecordingBackend(ScriptedBackend(lambda r: f"echo {r.stage_tag}"))
    rec.complete(REQ)
    store = rec.store(tmp_path / "s.json")
    store.save()
    assert json.loads((tmp_path / "s.json").read_text()) == {REQ.digest: "echo luv/T2/x"}


# -- HTTP -------------------------------------------------------------------------


def _ok(content="hello"):
    return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})


def _http(handler, **kw):
    return HttpBackend("http://llm.test/v1", "m", api_key="k", transport=httpx.MockTransport(handler),
                       sleep=lambda s: None, **kw)


def test_http_success_payload():
    seen = {}

    def handler(request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return _ok("answer")

    assert _http(handler).complete(REQ) == "answer"
    assert seen["url"] == "http://llm.test/v1/chat/completions"
    assert seen["auth"] == "Bearer k"
    assert seen["body"]["messages"] == [{"role": "system", "content": "system"},
                                        {"role": "user", "content": "user text"}]
    assert seen["body"]["temperature"] == 0.0


def test_http_retries_server_errors():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(503) if len(calls) < 3 else _ok("late")

    assert _http(handler, max_retries=3).complete(REQ) == "late"
    assert len(calls) == 3


def test_http_gives_up():
    with pytest.raises(BackendUnavailable):
        _http(lambda r: httpx.Response(500), max_retries=2).complete(REQ)


def test_http_transport_errors_are_retried():
    calls = []

    def handler(request):
        calls.append(1)
        raise httpx.ConnectError("refused")

    with pytest.raises(BackendUnavailable):
        _http(handler, max_retries=3).complete(REQ)
    assert len(calls) == 3


def test_http_rate_limit_surfaces_retry_after():
    with pytest.raises(RateLimited) as info:
        _http(lambda r: httpx.Response(429, headers={"retry-after": "7"}), max_retries=2).complete(REQ)
    assert info.value.retry_after == 7.0


def test_http_client_errors_are_not_retried():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(401, text="bad key")

    with pytest.raises(BackendUnavailable):
        _http(handler).complete(REQ)
    assert len(calls) == 1


def test_http_concurrency_bound():
    active = []
    peak = []
    lock = threading.Lock()
    gate = threading.Event()

    def handler(request):
        with lock:
            active.append(1)
            peak.append(len(active))
        gate.wait(0.05)
        with lock:
            active.pop()
        return _ok()

    backend = _http(handler, max_concurrent_requests=2)
    threads = [threading.Thread(target=backend.complete, args=(REQ,)) for _ in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert max(peak) <= 2


def test_make_backend():
    with pytest.raises(ValueError):
        make_backend(BackendConfig(kind="replay"))
    with pytest.raises(ValueError):
        make_backend(BackendConfig(kind="carrier-pigeon"))
    assert isinstance(make_backend(BackendConfig(kind="http", base_url="http://x", model="m")), HttpBackend)
