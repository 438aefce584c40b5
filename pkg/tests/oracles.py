"""Independent reference implementations used only by the tests.

Each oracle takes a deliberately different route from the library code:
full-matrix or brute-force enumeration, exact rational arithmetic, direct
formula evaluation.
"""

from __future__ import annotations

import itertools
import math
import statistics
from fractions import Fraction


def edit_distance_matrix(a: str, b: str) -> int:
    """Full (len(a)+1) x (len(b)+1) table, no row reuse."""
    d = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) + 1):
        d[i][0] = i
    for j in range(len(b) + 1):
        d[0][j] = j
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
    return d[len(a)][len(b)]


def item_similarity_oracle(a: str, b: str) -> Fraction:
    if not a and not b:
        return Fraction(1)
    return 1 - Fraction(edit_distance_matrix(a, b), max(len(a), len(b)))


def signature_weights_oracle(lengths: list[tuple[int, int, int, int]]) -> list[float]:
    """Direct evaluation of the inverse-variance weighting with exact fractions.

    lengths[j][i] is the length of item i in record j.  The zero-variance
    case is evaluated as a numerical limit by shrinking an extra additive
    term in every denominator, rather than by a special case.
    """
    cols = list(zip(*lengths))
    variances = []
    for col in cols:
        total = sum(col)
        variances.append(statistics.variance([Fraction(x, total) for x in col]))
    out = [0.0] * 4
    for group in ((0, 1), (2, 3)):
        vs = [variances[i] for i in group]
        eps = Fraction(1, 100) * statistics.median_low(vs)
        tiny = Fraction(1, 10**40) if any(v + eps == 0 for v in vs) else Fraction(0)
        inv = [1 / (v + eps + tiny) for v in vs]
        for i, x in zip(group, inv):
            out[i] = float(Fraction(1, 2) * x / sum(inv))
    return out


def two_level_alignment_oracle(a: list[tuple[str, str]], b: list[tuple[str, str]]) -> float:
    """Minimum alignment cost by enumerating every monotone alignment.

    Steps are (kind, condition).  Unmatched steps cost 1; a matched pair costs
    1 for different kinds and the normalized string edit distance otherwise.
    Returns the similarity 1 - cost / max(len).
    """
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0

    def pair_cost(x, y) -> Fraction:
        if x[0] != y[0]:
            return Fraction(1)
        return 1 - item_similarity_oracle(x[1], y[1])

    best = None
    for k in range(0, min(len(a), len(b)) + 1):
        for ia in itertools.combinations(range(len(a)), k):
            for ib in itertools.combinations(range(len(b)), k):
                cost = sum((pair_cost(a[i], b[j]) for i, j in zip(ia, ib)), Fraction(0))
                cost += (len(a) - k) + (len(b) - k)
                if best is None or cost < best:
                    best = cost
    return max(0.0, min(1.0, float(1 - best / max(len(a), len(b)))))


def cosine_oracle(a, b) -> float:
    na = math.fsum(x * x for x in a)
    nb = math.fsum(y * y for y in b)
    if na == 0 and nb == 0:
        return 1.0
    if na == 0 or nb == 0:
        return 0.0
    return math.fsum(x * y for x, y in zip(a, b)) / math.sqrt(na * nb)
