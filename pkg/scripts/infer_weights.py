"""Infer signature item weights from a knowledge base and show the working.

    python3 scripts/infer_weights.py tests/fixtures/kb.jsonl
    python3 scripts/infer_weights.py tests/fixtures/kb.jsonl --out weights.json
"""

from __future__ import annotations

import argparse

from scrs.kb.records import load_kb
from scrs.retrieval import DEFAULT_WEIGHTS, infer_signature_weights, save_weights

ITEMS = ("contract", "function", "params", "return")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("kb", help="knowledge base (JSON lines)")
    ap.add_argument("--out", help="write the weights file used by --weights file:PATH")
    args = ap.parse_args()
    weights = infer_signature_weights(load_kb(args.kb))
    print(f"{'item':<10}{'variance':>12}{'stability':>14}{'weight':>10}{'default':>10}")
    for name, t, w, d in zip(ITEMS, weights.trace, weights.w, DEFAULT_WEIGHTS):
        print(f"{name:<10}{t.variance:>12.6f}{t.stability:>14.3e}{w:>10.4f}{d:>10.3f}")
    if args.out:
        save_weights(weights, args.out)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
