"""Prompt templates, response schemas and structured-block extraction."""

from __future__ import annotations

import json
import re
from functools import lru_cache
from importlib import resources
from string import Template
from typing import Iterator

from jsonschema import Draft202012Validator

_FENCE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.S)


def _read(*parts: str) -> str:
    return resources.files("scrs").joinpath("prompts", *parts).read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def template(agent: str, name: str) -> Template:
    return Template(_read(agent, f"{name}.txt"))


def render(agent: str, name: str, **values) -> str:
    """Fill a template; every placeholder must be supplied."""
    return template(agent, name).substitute(**{k: str(v) for k, v in values.items()}).strip() + "\n"


@lru_cache(maxsize=None)
def schema(agent: str, name: str) -> dict:
    return json.loads(_read(agent, "schemas", f"{name}.json"))


@lru_cache(maxsize=None)
def validator(agent: str, name: str) -> Draft202012Validator:
    s = schema(agent, name)
    Draft202012Validator.check_schema(s)
    return Draft202012Validator(s)


def iter_json_blocks(text: str) -> Iterator[dict]:
    """Every JSON object embedded in ``text``: fenced blocks first, then bare ones."""
    decoder = json.JSONDecoder()
    seen: set[str] = set()
    chunks = [m.group(1) for m in _FENCE.finditer(text)] + [text]
    for chunk in chunks:
        i = chunk.find("{")
        while i >= 0:
            try:
                obj, end = decoder.raw_decode(chunk, i)
            except json.JSONDecodeError:
                i = chunk.find("{", i + 1)
                continue
            if isinstance(obj, dict):
                key = json.dumps(obj, sort_keys=True)
                if key not in seen:
                    seen.add(key)
                    yield obj
            i = chunk.find("{", end)


def first_valid_block(text: str, check: Draft202012Validator) -> tuple[dict | None, list[str]]:
    """First embedded object accepted by ``check`` and the errors of the rejected ones."""
    errors: list[str] = []
    for block in iter_json_blocks(text):
        problems = sorted(check.iter_errors(block), key=lambda e: list(e.path))
        if not problems:
            return block, errors
        errors.append("; ".join(f"{'/'.join(map(str, e.path)) or '<root>'}: {e.message}" for e in problems[:3]))
    if not errors:
        errors.append("no JSON object found in the response")
    return None, errors
