"""Similarity kernels and the composite threshold checker."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from scrs.features.compress import LogicalSequence, StructuralEmbedding, UsageGroup
from scrs.retrieval import item_similarity


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    """Cosine clipped to [0, 1]; two zero vectors match, one zero vector does not."""
    na = math.sqrt(math.fsum(x * x for x in a))
    nb = math.sqrt(math.fsum(y * y for y in b))
    if na == 0 and nb == 0:
        return 1.0
    if na == 0 or nb == 0:
        return 0.0
    value = math.fsum(x * y for x, y in zip(a, b)) / (na * nb)
    return min(1.0, max(0.0, value))


def numeric_similarity(a: StructuralEmbedding, b: StructuralEmbedding) -> float:
    return cosine(a.numeric_vector(), b.numeric_vector())


def control_similarity(a: StructuralEmbedding, b: StructuralEmbedding) -> float:
    return cosine(a.control_vector(), b.control_vector())


def _step_cost(x, y) -> float:
    if x.kind != y.kind:
        return 1.0
    return 1.0 - item_similarity(x.condition_text, y.condition_text)


def logical_distance(a: LogicalSequence, b: LogicalSequence) -> float:
    sa, sb = a.steps, b.steps
    prev = [float(j) for j in range(len(sb) + 1)]
    for i, x in enumerate(sa, 1):
        cur = [float(i)]
        for j, y in enumerate(sb, 1):
            cur.append(min(prev[j] + 1.0, cur[j - 1] + 1.0, prev[j - 1] + _step_cost(x, y)))
        prev = cur
    return prev[-1]


def logical_similarity(a: LogicalSequence, b: LogicalSequence) -> float:
    la, lb = len(a.steps), len(b.steps)
    if la == 0 and lb == 0:
        return 1.0
    if la == 0 or lb == 0:
        return 0.0
    return min(1.0, max(0.0, 1.0 - logical_distance(a, b) / max(la, lb)))


@dataclass(frozen=True)
class CheckerParams:
    w_o: tuple[float, float] = (0.27, 0.73)
    w_t: tuple[float, float] = (0.42, 0.58)
    tau_o: float = 0.92
    tau_t: float = 0.68
    tau_l: float = 0.90

    def __post_init__(self):
        for name in ("w_o", "w_t"):
            vec = tuple(float(x) for x in getattr(self, name))
            if len(vec) != 2 or min(vec) < 0 or abs(sum(vec) - 1.0) > 1e-9:
                raise ValueError(f"{name} must be two non-negative weights summing to 1, got {vec}")
            object.__setattr__(self, name, vec)
        for name in ("tau_o", "tau_t", "tau_l"):
            value = float(getattr(self, name))
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {value}")
            object.__setattr__(self, name, value)

    def to_dict(self) -> dict:
        return {"w_o": list(self.w_o), "w_t": list(self.w_t),
                "tau_o": self.tau_o, "tau_t": self.tau_t, "tau_l": self.tau_l}

    @classmethod
    def from_dict(cls, d: dict) -> "CheckerParams":
        base = cls()
        return cls(
            w_o=tuple(d.get("w_o", base.w_o)),
            w_t=tuple(d.get("w_t", base.w_t)),
            tau_o=d.get("tau_o", base.tau_o),
            tau_t=d.get("tau_t", base.tau_t),
            tau_l=d.get("tau_l", base.tau_l),
        )


@dataclass(frozen=True)
class SimilarityScores:
    s_n: float
    s_c: float
    s_l: float | None = None

    def to_dict(self) -> dict:
        d = {"s_n": round(self.s_n, 12), "s_c": round(self.s_c, 12)}
        if self.s_l is not None:
            d["s_l"] = round(self.s_l, 12)
        return d


def composite(weights: Sequence[float], scores: SimilarityScores) -> float:
    return weights[0] * scores.s_n + weights[1] * scores.s_c


def is_flagged(group: UsageGroup, scores: SimilarityScores, params: CheckerParams) -> bool:
    if group is UsageGroup.G_O:
        return composite(params.w_o, scores) < params.tau_o
    s_l = 1.0 if scores.s_l is None else scores.s_l
    return composite(params.w_t, scores) < params.tau_t and s_l < params.tau_l


def compute_scores(usage, reference) -> SimilarityScores:
    s_n = numeric_similarity(usage.embedding, reference.embedding)
    s_c = control_similarity(usage.embedding, reference.embedding)
    s_l = logical_similarity(usage.sequence, reference.sequence) if usage.group is UsageGroup.G_T else None
    return SimilarityScores(s_n, s_c, s_l)


def similarity_check(finding, reference, params: CheckerParams | None = None) -> tuple[SimilarityScores, bool]:
    """Scores of a finding's usage against its reference record, and whether they flag it."""
    params = params or CheckerParams()
    usage = getattr(finding, "usage", finding)
    scores = compute_scores(usage, reference)
    return scores, is_flagged(usage.group, scores, params)
