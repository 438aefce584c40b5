"""Counting mechanics of the final filter on a synthetic candidate corpus.

Every candidate is flagged by the similarity checker and carries a snapshot
trail.  A chosen number of trails drift between phases (a signature rewritten
at a later stage, or a security label flipped), so the conflict checker
discards exactly those and the rest survive as violations.

    python3 scripts/survivor_counting.py --candidates 2684 --conflicts 1957
"""

from __future__ import annotations

import argparse
import random
from collections import Counter

from scrs.engine.conflict import conflict_check
from scrs.engine.verdict import decide
from scrs.inspector.snapshots import SnapshotRepository, capture_snapshot


def run(candidates: int, conflicts: int, seed: int) -> Counter:
    rng = random.Random(seed)
    drifted = set(rng.sample(range(candidates), conflicts))
    repo = SnapshotRepository()
    counts: Counter = Counter()
    for i in range(candidates):
        sig = f"C{i}-f-{rng.randint(0, 4)}-uint256"
        ids = [capture_snapshot("FeatureExtraction", {"signature": sig, "parameters": sig.split("-")[2]}, repo),
               capture_snapshot("Stage1", {"signature": sig, "security": "vulnerable"}, repo)]
        if i not in drifted:
            ids.append(capture_snapshot("Stage3", {"signature": sig, "security": "vulnerable"}, repo))
        elif rng.random() < 0.5:
            ids.append(capture_snapshot("Stage3", {"signature": sig.replace("-f-", "-g-")}, repo))
        else:
            ids.append(capture_snapshot("Stage2", {"signature": sig, "security": "safe"}, repo))
        counts[decide(True, conflict_check(ids, repo)).value] += 1
    return counts


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--candidates", type=int, default=2684)
    ap.add_argument("--conflicts", type=int, default=1957)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not 0 <= args.conflicts <= args.candidates:
        ap.error("--conflicts must lie between 0 and --candidates")
    counts = run(args.candidates, args.conflicts, args.seed)
    print(f"candidates          {args.candidates}")
    for status, n in sorted(counts.items()):
        print(f"{status:<20}{n}")


if __name__ == "__main__":
    main()
