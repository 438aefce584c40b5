"""One-at-a-time sensitivity sweep of the checker weights and thresholds."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from scrs.engine.similarity import CheckerParams, SimilarityScores, is_flagged
from scrs.errors import EmptyFixtureSet, SchemaMismatch
from scrs.features.compress import UsageGroup

FAMILIES = ("w_t", "w_o", "tau_t", "tau_o", "tau_l")


@dataclass(frozen=True)
class LabeledScore:
    id: str
    group: UsageGroup
    scores: SimilarityScores
    label: bool

    @classmethod
    def from_dict(cls, d: dict) -> "LabeledScore":
        group = UsageGroup(d["group"])
        s_l = d.get("s_l")
        if group is UsageGroup.G_T and s_l is None:
            raise ValueError(f"{d.get('id')}: G_T entries need s_l")
        return cls(str(d["id"]), group, SimilarityScores(float(d["s_n"]), float(d["s_c"]),
                                                         None if s_l is None else float(s_l)), bool(d["label"]))


@dataclass(frozen=True)
class SweepGrid:
    weight_span: float = 0.05
    weight_step: float = 0.01
    tau_span: float = 0.05  # relative
    tau_step: float = 0.01

    @staticmethod
    def _offsets(span: float, step: float) -> list[float]:
        n = int(round(span / step)) if step > 0 else 0
        return [k * step for k in range(-n, n + 1)]

    def weight_offsets(self) -> list[float]:
        return self._offsets(self.weight_span, self.weight_step)

    def tau_factors(self) -> list[float]:
        return [1.0 + d for d in self._offsets(self.tau_span, self.tau_step)]


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    flagged: int

    def to_dict(self) -> dict:
        return {"precision": round(self.precision, 10), "recall": round(self.recall, 10),
                "f1": round(self.f1, 10), "flagged": self.flagged}


def evaluate(params: CheckerParams, fixtures: list[LabeledScore]) -> Metrics:
    tp = fp = fn = 0
    for item in fixtures:
        flagged = is_flagged(item.group, item.scores, params)
        tp += flagged and item.label
        fp += flagged and not item.label
        fn += (not flagged) and item.label
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return Metrics(p, r, f1, tp + fp)


@dataclass(frozen=True)
class SweepSetting:
    family: str
    value: tuple[float, ...]
    metrics: Metrics
    delta: tuple[float, float, float]

    def to_dict(self) -> dict:
        return {"value": list(self.value), **self.metrics.to_dict(),
                "delta_precision": round(self.delta[0], 10), "delta_recall": round(self.delta[1], 10),
                "delta_f1": round(self.delta[2], 10)}


@dataclass
class SweepReport:
    params: CheckerParams
    baseline: Metrics
    settings: dict[str, list[SweepSetting]] = field(default_factory=dict)

    def mean_abs_delta(self, family: str) -> tuple[float, float, float]:
        rows = self.settings[family]
        n = len(rows)
        return tuple(sum(abs(r.delta[i]) for r in rows) / n for i in range(3))  # type: ignore[return-value]

    def to_dict(self) -> dict:
        fam = {}
        for name, rows in self.settings.items():
            mp, mr, mf = self.mean_abs_delta(name)
            fam[name] = {
                "settings": [r.to_dict() for r in rows],
                "mean_abs_delta": {"precision": round(mp, 10), "recall": round(mr, 10), "f1": round(mf, 10)},
            }
        return {"params": self.params.to_dict(), "baseline": self.baseline.to_dict(), "families": fam}

    def to_text(self) -> str:
        lines = [f"baseline  P={self.baseline.precision:.4f}  R={self.baseline.recall:.4f}  F1={self.baseline.f1:.4f}",
                 "",
                 f"{'family':<8}{'points':>7}{'|dP|':>10}{'|dR|':>10}{'|dF1|':>10}"]
        for name, rows in self.settings.items():
            mp, mr, mf = self.mean_abs_delta(name)
            lines.append(f"{name:<8}{len(rows):>7}{mp:>10.4f}{mr:>10.4f}{mf:>10.4f}")
        for name, rows in self.settings.items():
            lines += ["", f"[{name}]", f"{'value':<16}{'P':>8}{'R':>8}{'F1':>8}{'flagged':>9}"]
            for r in rows:
                val = ",".join(f"{v:.4f}" for v in r.value)
                m = r.metrics
                lines.append(f"{val:<16}{m.precision:>8.4f}{m.recall:>8.4f}{m.f1:>8.4f}{m.flagged:>9}")
        return "\n".join(lines) + "\n"


def family_grid(params: CheckerParams, family: str, grid: SweepGrid) -> list[CheckerParams]:
    if family in ("w_t", "w_o"):
        center = getattr(params, family)[0]
        out = []
        for d in grid.weight_offsets():
            wn = round(center + d, 10)
            out.append(replace(params, **{family: (wn, round(1.0 - wn, 10))}))
        return out
    center = getattr(params, family)
    return [replace(params, **{family: min(1.0, round(center * f, 10))}) for f in grid.tau_factors()]


def sensitivity_sweep(params: CheckerParams, fixture_set: list[LabeledScore],
                      grid: SweepGrid | None = None, families=FAMILIES) -> SweepReport:
    if not fixture_set:
        raise EmptyFixtureSet("sensitivity sweep needs at least one labeled score")
    grid = grid or SweepGrid()
    baseline = evaluate(params, fixture_set)
    report = SweepReport(params, baseline)
    for fam in families:
        rows = []
        for p in family_grid(params, fam, grid):
            m = evaluate(p, fixture_set)
            value = getattr(p, fam)
            value = tuple(value) if isinstance(value, tuple) else (value,)
            rows.append(SweepSetting(fam, value, m, (m.precision - baseline.precision,
                                                     m.recall - baseline.recall, m.f1 - baseline.f1)))
        report.settings[fam] = rows
    return report


def load_fixture_set(directory: str | Path) -> list[LabeledScore]:
    """Labeled scores from every ``*.json`` file in a directory (list or ``{"items": [...]}``)."""
    items: list[LabeledScore] = []
    for path in sorted(Path(directory).glob("*.json")):
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            rows = data["items"] if isinstance(data, dict) else data
            items.extend(LabeledScore.from_dict(r) for r in rows)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise SchemaMismatch(f"{path}: {exc}") from exc
    return items
