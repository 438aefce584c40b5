"""Compile every Solidity fixture and refresh its committed AST cache.

The test suite reads the caches, so it runs without a compiler.  Point
SCRS_SOLC at solc or solcjs (0.8.x) before running:

    SCRS_SOLC=/path/to/solcjs python3 scripts/compile_fixtures.py
"""

from __future__ import annotations

import sys
from pathlib import Path

from scrs.errors import ScrsError
from scrs.features.compiler import compile_file, write_cache

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
# deliberately uncompilable inputs used by the skip tests
EXPECTED_FAILURES = {"Broken.sol"}


def main() -> int:
    status = 0
    for path in sorted(FIXTURES.rglob("*.sol")):
        if path.name in EXPECTED_FAILURES:
            continue
        try:
            doc = compile_file(path, use_cache=False)
        except ScrsError as exc:
            print(f"FAIL {path.relative_to(FIXTURES)}: {exc}", file=sys.stderr)
            status = 1
            continue
        write_cache(path, doc)
        print(f"ok   {path.relative_to(FIXTURES)}")
    return status


if __name__ == "__main__":
    sys.exit(main())
