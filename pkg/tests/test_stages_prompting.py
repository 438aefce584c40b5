import json

import pytest

from scrs.errors import StructureViolation
from scrs.inspector.stages import Stage, Verdict, parse_stage_response
from scrs.prompting import first_valid_block, iter_json_blocks, render, schema, template, validator


def test_well_formed_t2():
    out = parse_stage_response('{"verdict":"Yes","threats":["sandwich"]}', "T2")
    assert out.verdict is Verdict.YES and out.structured["threats"] == ["sandwich"]


def test_block_inside_prose():
    raw = ('Looking at the call, the minimum output is fixed.\n```json\n'
           '{"verdict": "No", "threats": []}\n```\nThat is all.')
    out = parse_stage_response(raw, Stage.T2)
    assert out.verdict is Verdict.NO
    assert out.raw_text == raw
    assert "That is all." in out.raw_text


def test_missing_verdict():
    with pytest.raises(StructureViolation):
        parse_stage_response('{"threats": []}', "T2")


def test_invalid_then_valid_block():
    raw = '{"verdict": "Maybe", "threats": []} and then {"verdict": "Unknown", "threats": ["x"]}'
    out = parse_stage_response(raw, "C2")
    assert out.verdict is Verdict.UNKNOWN and not out.verdict.positive


def test_snapshot_fields_are_restricted_per_stage():
    bad = {"verdict": "Yes", "threats": [], "snapshot": {"signature": "x", "definition": "y"}}
    with pytest.raises(StructureViolation):
        parse_stage_response(json.dumps(bad), "T2")


def test_iter_json_blocks_prefers_fences_and_dedupes():
    text = 'a {"k": 1} b\n```json\n{"k": 2}\n```\n'
    assert list(iter_json_blocks(text)) == [{"k": 2}, {"k": 1}]


def test_no_block_reports_error():
    block, errors = first_valid_block("plain prose", validator("luv", "T2"))
    assert block is None and errors == ["no JSON object found in the response"]


@pytest.mark.parametrize("agent, names", [
    ("uke", ["param-constraints", "return-checks", "override-obligations"]),
    ("luv", ["C1", "C2", "C3", "T1", "T2", "T3"]),
])
def test_every_task_template_has_a_valid_schema(agent, names):
    for name in names:
        assert template(agent, name).template.strip()
        assert schema(agent, name)["type"] == "object"
        validator(agent, name)


def test_render_requires_every_placeholder():
    with pytest.raises(KeyError):
        render("luv", "retry", original="x")
    assert render("luv", "retry", original="x", error="y").endswith("\n")
