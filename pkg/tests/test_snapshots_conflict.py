import random
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scrs.engine.conflict import Consistency, ConsistencyVerdict, conflict_check
from scrs.errors import FieldNotAllowed, UnknownSnapshotId
from scrs.inspector.snapshots import ALLOWED, FIELDS, Phase, SnapshotRepository, capture_snapshot, normalize_value

from synthetic import TABLE

VALUES = {
    "signature": "A-f-2-uint256", "security": "vulnerable", "definition": "function A.f(uint256,address)",
    "parameters": 2, "return_type": "uint256", "parent_contract": "A", "overridden_function": "none",
    "related_calls": ["A.f"],
}


def test_allowed_map_matches_table():
    assert {p.value: set(f) for p, f in ALLOWED.items()} == TABLE


def test_feature_extraction_without_security_is_accepted():
    repo = SnapshotRepository()
    payload = {k: v for k, v in VALUES.items() if k != "security"}
    sid = capture_snapshot(Phase.FEATURE_EXTRACTION, payload, repo)
    assert set(repo.get(sid).fields) == set(payload)


def test_feature_extraction_with_security_is_refused():
    repo = SnapshotRepository()
    with pytest.raises(FieldNotAllowed):
        capture_snapshot(Phase.FEATURE_EXTRACTION, VALUES, repo)
    assert len(repo) == 0


def test_stage1_all_but_related_calls():
    repo = SnapshotRepository()
    capture_snapshot("Stage1", {k: v for k, v in VALUES.items() if k != "related_calls"}, repo)
    with pytest.raises(FieldNotAllowed):
        capture_snapshot("Stage1", {"related_calls": ["A.f"]}, repo)


def test_normalization():
    assert normalize_value("signature", "  A-F-2-UINT256 ") == "a-f-2-uint256"
    assert normalize_value("definition", "function  A.f(\n uint256)") == "function a.f( uint256)"
    assert normalize_value("related_calls", ["B.g", "A.f "]) == frozenset({"a.f", "b.g"})
    assert normalize_value("related_calls", "A.f, B.g") == frozenset({"a.f", "b.g"})
    assert normalize_value("parameters", ["x", "y"]) == "2"
    assert normalize_value("parameters", 3) == "3"


def test_ids_are_sequential_and_unknown_ids_fail():
    repo = SnapshotRepository(prefix="t")
    a = capture_snapshot("Stage2", {"signature": "x"}, repo)
    b = capture_snapshot("Stage3", {"signature": "x"}, repo)
    assert (a, b) == ("t-000001", "t-000002")
    with pytest.raises(UnknownSnapshotId):
        repo.get("t-000099")


def test_concurrent_appends_get_distinct_ids():
    repo = SnapshotRepository()
    ids = []
    lock = threading.Lock()

    def work():
        for _ in range(200):
            sid = capture_snapshot("Stage3", {"signature": "x"}, repo)
            with lock:
                ids.append(sid)

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(set(ids)) == len(ids) == 1600


def test_repository_jsonl_round_trip(tmp_path):
    repo = SnapshotRepository()
    capture_snapshot("FeatureExtraction", {k: v for k, v in VALUES.items() if k != "security"}, repo, "u1")
    capture_snapshot("Stage2", {"signature": "A-f-2-uint256", "related_calls": ["A.f"]}, repo, "u1", ["t"])
    path = tmp_path / "s.jsonl"
    repo.save(path)
    back = SnapshotRepository.load(path)
    assert [s.to_dict() for s in back] == [s.to_dict() for s in repo]


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(list(Phase)), st.sets(st.sampled_from(FIELDS), min_size=1))
def test_capture_never_stores_absent_pairs(phase, keys):
    repo = SnapshotRepository()
    payload = {k: VALUES[k] for k in keys}
    try:
        sid = capture_snapshot(phase, payload, repo)
    except FieldNotAllowed:
        assert not keys <= TABLE[phase.value]
        assert len(repo) == 0
        return
    assert keys <= TABLE[phase.value]
    assert set(repo.get(sid).fields) <= TABLE[phase.value]


# -- conflict checker ------------------------------------------------------------


def _check(repo, *ids):
    return conflict_check(ids, repo)


def test_r1_signature_drift():
    repo = SnapshotRepository()
    a = capture_snapshot("Stage1", {"signature": "A-f-2-uint256"}, repo)
    b = capture_snapshot("Stage3", {"signature": "A-f-3-uint256"}, repo)
    v = _check(repo, a, b)
    assert v.status is Consistency.CONFLICT
    assert [c.field for c in v.conflicting_fields] == ["signature"]
    c = v.conflicting_fields[0]
    assert (c.phase_a, c.value_a, c.phase_b, c.value_b) == ("Stage1", "a-f-2-uint256", "Stage3", "a-f-3-uint256")


def test_identical_signatures_are_consistent():
    repo = SnapshotRepository()
    ids = [capture_snapshot(p, {"signature": "A-f-2-uint256"}, repo)
           for p in ("FeatureExtraction", "Stage1", "Stage2", "Stage3", "Stage4")]
    assert _check(repo, *ids).consistent


def test_r1_ignores_case_and_whitespace():
    repo = SnapshotRepository()
    a = capture_snapshot("FeatureExtraction", {"definition": "function A.f(uint256)"}, repo)
    b = capture_snapshot("Stage3", {"definition": "FUNCTION  A.f(uint256) "}, repo)
    assert _check(repo, a, b).consistent


def test_r1_related_calls_compare_as_sets():
    repo = SnapshotRepository()
    a = capture_snapshot("FeatureExtraction", {"related_calls": ["A.f", "B.g"]}, repo)
    b = capture_snapshot("Stage2", {"related_calls": ["b.g", "a.f"]}, repo)
    c = capture_snapshot("Stage4", {"related_calls": ["a.f"]}, repo)
    assert _check(repo, a, b).consistent
    assert not _check(repo, a, b, c).consistent


def test_r2_parameterless_function_with_parameter_threat():
    repo = SnapshotRepository()
    fe = capture_snapshot("FeatureExtraction", {"signature": "A-f-0-uint256", "parameters": 0}, repo)
    t2 = capture_snapshot("Stage2", {"signature": "A-f-0-uint256"}, repo, threats=["insecure parameter passing"])
    v = _check(repo, fe, t2)
    assert v.status is Consistency.CONFLICT
    assert v.conflicting_fields[0].field == "parameters"


def test_r2_void_function_with_return_threat():
    repo = SnapshotRepository()
    fe = capture_snapshot("FeatureExtraction", {"return_type": "void", "parameters": 1}, repo)
    t2 = capture_snapshot("Stage2", {}, repo, threats=["unchecked return value of the call"])
    v = _check(repo, fe, t2)
    assert not v.consistent and v.conflicting_fields[0].field == "return_type"


def test_r2_needs_the_matching_feature():
    repo = SnapshotRepository()
    fe = capture_snapshot("FeatureExtraction", {"parameters": 2, "return_type": "uint256"}, repo)
    t2 = capture_snapshot("Stage2", {}, repo, threats=["insecure parameter passing", "unchecked return value"])
    assert _check(repo, fe, t2).consistent


def test_verdict_invariant():
    with pytest.raises(ValueError):
        ConsistencyVerdict(Consistency.CONFLICT, ())


def test_random_drift_is_always_detected():
    rng = random.Random(5)
    for _ in range(500):
        repo = SnapshotRepository()
        sig = f"C-f-{rng.randint(0, 5)}-uint256"
        phases = rng.sample(["FeatureExtraction", "Stage1", "Stage2", "Stage3", "Stage4"], k=rng.randint(2, 5))
        drift = rng.random() < 0.5
        ids = []
        for i, p in enumerate(phases):
            value = sig if not (drift and i == len(phases) - 1) else sig.replace("C-", "D-")
            ids.append(capture_snapshot(p, {"signature": value}, repo))
        assert _check(repo, *ids).consistent is (not drift)
