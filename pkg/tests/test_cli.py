import json

import pytest

from scrs.cli import main
from scrs.config import RunConfig
from scrs.errors import SchemaMismatch

from conftest import CONTRACTS, FIXTURES, KB_FILE, REPLAY, SCRS

ANALYZE = ["--kb", str(KB_FILE), "--fixtures", str(REPLAY / "analyze.json")]


def analyze(tmp_path, name, *extra):
    out = tmp_path / f"{name}.json"
    code = main(["analyze", "--contract", str(CONTRACTS / f"{name}.sol"), "--out", str(out), *ANALYZE, *extra])
    return code, out


# -- build-kb ----------------------------------------------------------------------


def test_build_kb_happy_path(tmp_path):
    out = tmp_path / "kb.jsonl"
    assert main(["build-kb", "--sources", str(SCRS), "--out", str(out), "--fixtures", str(REPLAY / "kb.json")]) == 0
    assert len(out.read_text().splitlines()) >= 3
    assert out.read_bytes() == KB_FILE.read_bytes()


def test_build_kb_empty_dir(tmp_path):
    assert main(["build-kb", "--sources", str(tmp_path), "--out", str(tmp_path / "kb.jsonl"),
                 "--fixtures", str(REPLAY / "kb.json")]) == 2


def test_build_kb_replay_miss_is_backend_failure(tmp_path):
    empty = tmp_path / "empty.json"
    empty.write_text("{}")
    assert main(["build-kb", "--sources", str(SCRS), "--out", str(tmp_path / "kb.jsonl"),
                 "--fixtures", str(empty)]) == 1


def test_build_kb_missing_store(tmp_path):
    assert main(["build-kb", "--sources", str(SCRS), "--out", str(tmp_path / "kb.jsonl"),
                 "--fixtures", str(tmp_path / "nope.json")]) == 2


# -- analyze ---------------------------------------------------------------------------


def test_analyze_swap(tmp_path):
    code, out = analyze(tmp_path, "swap_zero_min")
    assert code == 3
    report = json.loads(out.read_text())
    assert report["schema_version"] == 1
    violations = [e for c in report["contracts"] for e in c["verdicts"] if e["status"] == "Violation"]
    assert len(violations) == 1 and violations[0]["usage"]["signature"] == "ISwapRouter-swap-4-uint256"
    snaps = out.with_name("swap_zero_min.snapshots.jsonl")
    assert report["snapshots_file"] == snaps.name
    phases = [json.loads(line)["phase"] for line in snaps.read_text().splitlines()]
    assert phases == ["FeatureExtraction", "Stage1", "Stage2", "Stage3", "Stage4"]


def test_analyze_benign_twins(tmp_path):
    for name in ("swap_guarded", "capped_guarded"):
        code, out = analyze(tmp_path, name)
        assert code == 0
        assert json.loads(out.read_text())["summary"]["violations"] == 0


def test_analyze_capped(tmp_path):
    code, out = analyze(tmp_path, "capped_bypass")
    assert code == 3
    (entry,) = json.loads(out.read_text())["contracts"][0]["verdicts"]
    assert entry["status"] == "Violation"
    assert "ERC20._mint" in entry["usage"]["related_calls"]
    assert any("cap" in t for t in entry["threat_vectors"])


def test_analyze_is_deterministic(tmp_path):
    a = analyze(tmp_path, "swap_zero_min")[1].read_bytes()
    b = analyze(tmp_path, "swap_zero_min")[1].read_bytes()
    assert a == b


def test_analyze_to_stdout(capsys):
    code = main(["analyze", "--contract", str(CONTRACTS / "capped_bypass.sol"), *ANALYZE])
    assert code == 3
    assert json.loads(capsys.readouterr().out)["summary"]["violations"] == 1


def test_analyze_missing_kb(tmp_path):
    code = main(["analyze", "--contract", str(CONTRACTS / "swap_zero_min.sol"), "--kb", str(tmp_path / "kb.jsonl"),
                 "--fixtures", str(REPLAY / "analyze.json")])
    assert code == 2


def test_analyze_missing_contract(tmp_path):
    assert main(["analyze", "--contract", str(tmp_path / "x.sol"), *ANALYZE]) == 2


def test_analyze_replay_miss(tmp_path):
    empty = tmp_path / "empty.json"
    empty.write_text("{}")
    code = main(["analyze", "--contract", str(CONTRACTS / "swap_zero_min.sol"), "--kb", str(KB_FILE),
                 "--fixtures", str(empty)])
    assert code == 1


def test_threshold_override_rejects_violation(tmp_path):
    # a tiny tau_t makes the swap call look similar enough to its reference
    code, out = analyze(tmp_path, "swap_zero_min", "--tau-t", "0.05")
    assert code == 0
    report = json.loads(out.read_text())
    assert report["settings"]["checker"]["tau_t"] == 0.05
    assert report["summary"]["similarity_rejected"] == 1


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"kb_path": str(KB_FILE), "fixture_path": str(REPLAY / "analyze.json"),
                               "checker": {"tau_t": 0.05}}))
    out = tmp_path / "r.json"
    assert main(["analyze", "--config", str(cfg), "--contract", str(CONTRACTS / "swap_zero_min.sol"),
                 "--kb", str(KB_FILE), "--out", str(out)]) == 0
    assert main(["analyze", "--config", str(cfg), "--contract", str(CONTRACTS / "swap_zero_min.sol"),
                 "--kb", str(KB_FILE), "--out", str(out), "--tau-t", "0.68"]) == 3


def test_inferred_weights(tmp_path):
    kb = tmp_path / "kb.jsonl"
    kb.write_bytes(KB_FILE.read_bytes())
    out = tmp_path / "r.json"
    # comprehensive prompts quote the reference record but not its score, so the replay store still matches
    code = main(["analyze", "--contract", str(CONTRACTS / "capped_bypass.sol"), "--kb", str(kb), "--weights", "infer",
                 "--fixtures", str(REPLAY / "analyze.json"), "--out", str(out)])
    assert code == 3
    assert json.loads(out.read_text())["settings"]["weights_source"] == "infer"
    assert (tmp_path / "kb.jsonl.weights.json").is_file()


# -- sweep -------------------------------------------------------------------------------


def test_sweep_cli(tmp_path):
    out, table = tmp_path / "sweep.json", tmp_path / "sweep.txt"
    assert main(["sweep", "--fixtures", str(FIXTURES / "sweep" / "mixed"), "--out", str(out),
                 "--table", str(table)]) == 0
    fams = json.loads(out.read_text())["families"]
    assert all(len(f["settings"]) == 11 for f in fams.values()) and len(fams) == 5
    assert "tau_o" in table.read_text()


def test_sweep_empty(tmp_path):
    assert main(["sweep", "--fixtures", str(tmp_path)]) == 2


# -- report --------------------------------------------------------------------------------


def test_report_text_and_json(tmp_path, capsys):
    _, out = analyze(tmp_path, "swap_zero_min")
    capsys.readouterr()
    assert main(["report", "--in", str(out), "--format", "text"]) == 0
    text = capsys.readouterr().out
    assert text.count("[VIOLATION]") == 1
    assert main(["report", "--in", str(out), "--format", "json"]) == 0
    assert capsys.readouterr().out == out.read_text()


def test_report_empty(tmp_path, capsys):
    p = tmp_path / "empty.json"
    p.write_text(json.dumps({"schema_version": 1, "contracts": [], "summary": {}}))
    assert main(["report", "--in", str(p)]) == 0
    assert "0 violations" in capsys.readouterr().out


def test_report_unreadable(tmp_path):
    assert main(["report", "--in", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert main(["report", "--in", str(bad)]) == 2


# -- config ---------------------------------------------------------------------------------


def test_config_round_trip_and_unknown_keys(tmp_path):
    cfg = RunConfig(kb_path="kb.jsonl", fixture_path="f.json")
    assert RunConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(SchemaMismatch):
        RunConfig.from_dict({"colour": "blue"})


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig().validate()
    with pytest.raises(ValueError):
        RunConfig(backend="http").validate()
    with pytest.raises(ValueError):
        RunConfig(fixture_path="x", weights_mode="magic").validate()
    merged = RunConfig(fixture_path="x").merged({"checker": {"tau_o": 0.5, "tau_t": None}, "workers": None})
    assert merged.checker.tau_o == 0.5 and merged.checker.tau_t == 0.68 and merged.workers == 4
