"""Thin wrapper around a Solidity compiler speaking ``--standard-json``.

Both the native ``solc`` binary and the npm ``solcjs`` wrapper accept the
same standard-JSON input on stdin.  Imports are resolved here and shipped as
source contents, so the compiler never touches the filesystem.

A compiled document is cached next to its source as ``<file>.ast.json``;
the cache is reused only while the stored source digest still matches.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import posixpath
import re
import shutil
import subprocess
from pathlib import Path

from scrs.errors import CompilationFailed, UnsupportedSchema

logger = logging.getLogger(__name__)

IMPORT_RE = re.compile(r'^\s*import\s+(?:[^;]*?\bfrom\s+)?["\']([^"\']+)["\']', re.M)
PRAGMA_RE = re.compile(r"pragma\s+solidity\s+([^;]+);")
CACHE_SUFFIX = ".ast.json"


def find_compiler(explicit: str | None = None) -> str | None:
    """Compiler path from the argument, ``SCRS_SOLC``, or ``PATH``."""
    for cand in (explicit, os.environ.get("SCRS_SOLC"), "solc", "solcjs"):
        if not cand:
            continue
        path = shutil.which(cand) or (cand if Path(cand).is_file() else None)
        if path:
            return path
    return None


def compiler_version(compiler: str) -> str:
    out = subprocess.run([compiler, "--version"], capture_output=True, text=True, timeout=60)
    m = re.search(r"(\d+\.\d+\.\d+)", out.stdout + out.stderr)
    return m.group(1) if m else ""


def _version_tuple(v: str) -> tuple[int, ...]:
    parts = [int(x) for x in re.findall(r"\d+", v)[:3]]
    return tuple(parts + [0] * (3 - len(parts)))


def pragma_allows(pragma: str, version: str) -> bool:
    """Evaluate a ``pragma solidity`` constraint for one compiler version.

    Supports ``^``, ``~``, comparison operators, bare versions, ``||`` and
    hyphen ranges; anything unparseable is accepted.
    """
    v = _version_tuple(version)
    for alternative in pragma.split("||"):
        alternative = alternative.strip()
        hy = re.fullmatch(r"(\S+)\s+-\s+(\S+)", alternative)
        if hy:
            if _version_tuple(hy.group(1)) <= v <= _version_tuple(hy.group(2)):
                return True
            continue
        ok = True
        for op, ver in re.findall(r"(\^|~|>=|<=|>|<|=)?\s*(\d+(?:\.\d+){0,2})", alternative):
            t = _version_tuple(ver)
            if op == "^":
                upper = (t[0], t[1] + 1, 0) if t[0] == 0 else (t[0] + 1, 0, 0)
                ok &= t <= v < upper
            elif op == "~":
                ok &= t <= v < (t[0], t[1] + 1, 0)
            elif op == ">=":
                ok &= v >= t
            elif op == "<=":
                ok &= v <= t
            elif op == ">":
                ok &= v > t
            elif op == "<":
                ok &= v < t
            else:
                ok &= v == t
        if ok:
            return True
    return False


def collect_sources(path: Path, include_paths: list[Path] | None = None) -> tuple[str, dict[str, str]]:
    """Read ``path`` and its transitive imports keyed the way solc names them."""
    path = Path(path)
    roots = [path.parent] + list(include_paths or [])
    primary = path.name
    sources: dict[str, str] = {}
    pending = [(primary, path)]
    while pending:
        key, file = pending.pop()
        if key in sources:
            continue
        try:
            text = file.read_text(encoding="utf-8")
        except OSError as exc:
            raise CompilationFailed(f"cannot read {file}: {exc}") from exc
        sources[key] = text
        for imp in IMPORT_RE.findall(text):
            if imp.startswith("."):
                ikey = posixpath.normpath(posixpath.join(posixpath.dirname(key), imp))
                # solc drops ".." segments that climb above the virtual root
                while ikey.startswith("../"):
                    ikey = ikey[3:]
                ifile = (file.parent / imp).resolve()
            else:
                ikey = imp
                ifile = next((r / imp for r in roots if (r / imp).is_file()), roots[0] / imp)
            pending.append((ikey, ifile))
    return primary, sources


def source_digest(sources: dict[str, str]) -> str:
    h = hashlib.sha256()
    for key in sorted(sources):
        h.update(key.encode() + b"\0" + sources[key].encode() + b"\0")
    return h.hexdigest()


def _parse_output(stdout: str) -> dict:
    # solcjs may print banner lines before the JSON payload
    start = stdout.find("{")
    if start < 0:
        raise CompilationFailed(f"compiler produced no JSON: {stdout[:200]!r}")
    try:
        return json.loads(stdout[start:])
    except json.JSONDecodeError as exc:
        raise CompilationFailed(f"unreadable compiler output: {exc}") from exc


def compile_sources(primary: str, sources: dict[str, str], compiler: str, timeout: float = 120) -> dict:
    version = compiler_version(compiler)
    for key, text in sources.items():
        m = PRAGMA_RE.search(text)
        if not m:
            continue
        constraint = m.group(1).strip()
        if version and not pragma_allows(constraint, version):
            raise UnsupportedSchema(f"{key}: pragma solidity {constraint} does not admit compiler {version}")
    request = {
        "language": "Solidity",
        "sources": {k: {"content": v} for k, v in sorted(sources.items())},
        "settings": {"outputSelection": {"*": {"": ["ast"]}}},
    }
    try:
        proc = subprocess.run(
            [compiler, "--standard-json"], input=json.dumps(request),
            capture_output=True, text=True, timeout=timeout,
        )
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise CompilationFailed(f"compiler invocation failed: {exc}") from exc
    out = _parse_output(proc.stdout)
    errors = [e for e in out.get("errors", []) if e.get("severity") == "error"]
    if errors:
        msg = "; ".join(e.get("formattedMessage", e.get("message", "")).strip() for e in errors)
        raise CompilationFailed(msg)
    out.pop("errors", None)
    out.pop("contracts", None)
    out["x-scrs"] = {
        "compiler": version,
        "primary": [primary],
        "sources": dict(sorted(sources.items())),
        "digest": source_digest(sources),
    }
    return out


def compile_file(path: str | Path, compiler: str | None = None, use_cache: bool = True,
                 include_paths: list[Path] | None = None) -> dict:
    """Compile one ``.sol`` file into an AST document (standard-JSON ``ast`` output)."""
    path = Path(path)
    primary, sources = collect_sources(path, include_paths)
    cache = path.with_name(path.name + CACHE_SUFFIX)
    digest = source_digest(sources)
    if use_cache and cache.is_file():
        try:
            doc = json.loads(cache.read_text(encoding="utf-8"))
            if (doc.get("x-scrs") or {}).get("digest") == digest:
                return doc
        except (OSError, json.JSONDecodeError):
            logger.warning("ignoring unreadable AST cache %s", cache)
    exe = find_compiler(compiler)
    if exe is None:
        raise CompilationFailed(f"no Solidity compiler available for {path} (set SCRS_SOLC or --compiler)")
    doc = compile_sources(primary, sources, exe)
    return doc


def write_cache(path: str | Path, doc: dict) -> Path:
    path = Path(path)
    cache = path.with_name(path.name + CACHE_SUFFIX)
    cache.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return cache
