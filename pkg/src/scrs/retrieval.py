"""Signature-weight inference and reference retrieval over the knowledge base.

Each composite-signature item is compared by normalized edit distance and
the item similarities are mixed with a weight vector.  Weights are inferred
from the spread of item lengths across the knowledge base: items whose
normalized lengths vary less are more stable identifiers and receive more
weight inside their group.  The name items (contract, function) and the
shape items (arity, return type) each get half of the total mass.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from scrs.errors import EmptyKb, IoFailure, SchemaMismatch, SingleRecord
from scrs.features.compress import CompositeSignature

logger = logging.getLogger(__name__)

ITEM_NAMES = ("contract_name", "function_name", "param_count", "return_type")
GROUPS = ((0, 1), (2, 3))
GROUP_PRIOR = 0.5
STABILITY_FACTOR = 0.01
DEFAULT_WEIGHTS = (0.079, 0.421, 0.313, 0.187)


def levenshtein(a: str, b: str) -> int:
    """Unit-cost insert/delete/substitute distance, two-row DP."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def item_similarity(a: str, b: str) -> float:
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    # one integer division keeps the result correctly rounded
    return (longest - levenshtein(a, b)) / longest


@dataclass(frozen=True)
class ItemTrace:
    normalized_lengths: tuple[float, ...]
    variance: float
    stability: float
    group_weight: float


@dataclass(frozen=True)
class SignatureWeights:
    w: tuple[float, float, float, float] = DEFAULT_WEIGHTS
    trace: tuple[ItemTrace, ...] = field(default=(), compare=False)
    source: str = "default"

    def __post_init__(self):
        if len(self.w) != 4 or any(x < 0 for x in self.w):
            raise ValueError(f"weights must be 4 non-negative reals, got {self.w}")
        if abs(sum(self.w) - 1.0) > 1e-6:
            raise ValueError(f"weights must sum to 1, got {sum(self.w)}")

    def to_dict(self) -> dict:
        d = {"weights": dict(zip(ITEM_NAMES, self.w)), "source": self.source}
        if self.trace:
            d["trace"] = {
                name: {"variance": t.variance, "stability": t.stability, "group_weight": t.group_weight}
                for name, t in zip(ITEM_NAMES, self.trace)
            }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SignatureWeights":
        w = d.get("weights", d)
        if isinstance(w, dict):
            vec = tuple(float(w[k]) for k in ITEM_NAMES)
        else:
            vec = tuple(float(x) for x in w)
        return cls(vec, source=d.get("source", "file") if isinstance(d, dict) else "file")  # type: ignore[arg-type]


def signature_similarity(a: CompositeSignature, b: CompositeSignature,
                         w: SignatureWeights | Sequence[float] = DEFAULT_WEIGHTS) -> float:
    weights = w.w if isinstance(w, SignatureWeights) else tuple(w)
    score = sum(wi * item_similarity(x, y) for wi, x, y in zip(weights, a.items(), b.items()))
    return min(1.0, max(0.0, score))


def _sample_variance(xs: Sequence[float]) -> float:
    n = len(xs)
    mean = sum(xs) / n
    return sum((x - mean) ** 2 for x in xs) / (n - 1)


def _group_weights(variances: list[float]) -> tuple[list[float], float]:
    # lower median of the group; for two items that is the smaller variance
    stability = STABILITY_FACTOR * sorted(variances)[(len(variances) - 1) // 2]
    denom = [v + stability for v in variances]
    if any(d == 0 for d in denom):
        # limit as the stability constant vanishes: zero-variance items share the group
        zeros = [d == 0 for d in denom]
        k = sum(zeros)
        return [1.0 / k if z else 0.0 for z in zeros], stability
    inv = [1.0 / d for d in denom]
    total = sum(inv)
    return [x / total for x in inv], stability


def length_samples(signatures: Iterable[CompositeSignature]) -> list[list[int]]:
    """Per-item string lengths, one list per item."""
    cols: list[list[int]] = [[], [], [], []]
    for sig in signatures:
        for i, item in enumerate(sig.items()):
            cols[i].append(len(item))
    return cols


def infer_signature_weights(kb) -> SignatureWeights:
    """Infer item weights from a knowledge base or an iterable of signatures."""
    sigs = [getattr(r, "signature", r) for r in kb]
    if not sigs:
        raise EmptyKb("cannot infer weights from an empty knowledge base")
    if len(sigs) < 2:
        raise SingleRecord("weight inference needs at least two records")
    cols = length_samples(sigs)
    normalized = []
    variances = []
    for col in cols:
        total = sum(col)
        lhat = [x / total for x in col]
        normalized.append(tuple(lhat))
        variances.append(_sample_variance(lhat))
    weights = [0.0] * 4
    traces: list[ItemTrace | None] = [None] * 4
    for group in GROUPS:
        gw, eps = _group_weights([variances[i] for i in group])
        for i, wt in zip(group, gw):
            weights[i] = GROUP_PRIOR * wt
            traces[i] = ItemTrace(normalized[i], variances[i], eps, wt)
    return SignatureWeights(tuple(weights), tuple(traces), source="infer")  # type: ignore[arg-type]


@dataclass(frozen=True)
class RetrievalHit:
    record: object
    score: float


def retrieve_reference(target: CompositeSignature, kb,
                       w: SignatureWeights | Sequence[float] = DEFAULT_WEIGHTS) -> RetrievalHit:
    """Highest-scoring record; ties go to the lexicographically smallest id."""
    best = None
    for rec in kb:
        score = signature_similarity(target, rec.signature, w)
        if best is None or score > best[0] or (score == best[0] and rec.id < best[1].id):
            best = (score, rec)
    if best is None:
        raise EmptyKb("cannot retrieve from an empty knowledge base")
    return RetrievalHit(best[1], best[0])


def weights_sidecar(kb_path: str | Path) -> Path:
    kb_path = Path(kb_path)
    return kb_path.with_name(kb_path.name + ".weights.json")


def save_weights(weights: SignatureWeights, path: str | Path) -> None:
    from scrs.io import atomic_write_text

    atomic_write_text(path, json.dumps(weights.to_dict(), indent=2, sort_keys=True) + "\n")


def load_weights(path: str | Path) -> SignatureWeights:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read weights file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaMismatch(f"weights file {path} is not JSON: {exc}") from exc
    try:
        return SignatureWeights.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaMismatch(f"weights file {path}: {exc}") from exc


def resolve_weights(mode: str, kb=None, kb_path: str | Path | None = None) -> SignatureWeights:
    """``default``, ``infer`` (cached next to the KB file) or ``file:PATH``."""
    if mode == "default":
        return SignatureWeights(DEFAULT_WEIGHTS)
    if mode.startswith("file:"):
        return load_weights(mode[5:])
    if mode != "infer":
        raise ValueError(f"unknown weights mode {mode!r}")
    weights = infer_signature_weights(kb if kb is not None else [])
    if kb_path is not None:
        try:
            save_weights(weights, weights_sidecar(kb_path))
        except IoFailure as exc:
            logger.warning("could not cache weights: %s", exc)
    return weights
