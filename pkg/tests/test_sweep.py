import json

import pytest

from scrs.engine.similarity import CheckerParams, SimilarityScores
from scrs.engine.sweep import (
    FAMILIES,
    LabeledScore,
    SweepGrid,
    evaluate,
    family_grid,
    load_fixture_set,
    sensitivity_sweep,
)
from scrs.errors import EmptyFixtureSet, SchemaMismatch
from scrs.features import UsageGroup

from conftest import FIXTURES

STEP = FIXTURES / "sweep" / "step"
MIXED = FIXTURES / "sweep" / "mixed"


def test_default_grid_has_eleven_points_per_family():
    report = sensitivity_sweep(CheckerParams(), load_fixture_set(MIXED))
    assert list(report.settings) == list(FAMILIES)
    for fam in FAMILIES:
        assert len(report.settings[fam]) == 11


def test_weight_grid_values():
    values = [p.w_t for p in family_grid(CheckerParams(), "w_t", SweepGrid())]
    assert values[0] == pytest.approx((0.37, 0.63)) and values[-1] == pytest.approx((0.47, 0.53))
    assert values[5] == pytest.approx((0.42, 0.58))
    for a, b in zip(values, values[1:]):
        assert b[0] - a[0] == pytest.approx(0.01)


def test_tau_grid_is_relative_and_capped():
    values = [p.tau_o for p in family_grid(CheckerParams(), "tau_o", SweepGrid())]
    assert values[0] == pytest.approx(0.92 * 0.95) and values[5] == pytest.approx(0.92)
    assert max(values) <= 1.0
    tl = [p.tau_l for p in family_grid(CheckerParams(tau_l=0.99), "tau_l", SweepGrid())]
    assert max(tl) == 1.0


def test_single_point_grid_has_zero_deltas():
    grid = SweepGrid(weight_span=0, tau_span=0)
    report = sensitivity_sweep(CheckerParams(), load_fixture_set(MIXED), grid)
    for fam in FAMILIES:
        assert len(report.settings[fam]) == 1
        assert report.mean_abs_delta(fam) == (0.0, 0.0, 0.0)


def test_step_function_fixture():
    items = load_fixture_set(STEP)
    assert all(i.group is UsageGroup.G_O for i in items)
    report = sensitivity_sweep(CheckerParams(), items, families=("tau_o",))
    rows = report.settings["tau_o"]
    sizes = [r.metrics.flagged for r in rows]
    assert sizes == sorted(sizes)
    for r in rows:
        # all composites are 0.95: everything flags exactly when tau_o exceeds it
        assert r.metrics.flagged == (len(items) if r.value[0] > 0.95 else 0)
    assert sizes[0] == 0 and sizes[-1] == len(items)


def test_evaluate_counts():
    items = [
        LabeledScore("a", UsageGroup.G_O, SimilarityScores(0.1, 0.1), True),
        LabeledScore("b", UsageGroup.G_O, SimilarityScores(1.0, 1.0), True),
        LabeledScore("c", UsageGroup.G_T, SimilarityScores(0.1, 0.1, 0.1), False),
    ]
    m = evaluate(CheckerParams(), items)
    assert (m.precision, m.recall, m.flagged) == (0.5, 0.5, 2)


def test_empty_fixture_set(tmp_path):
    with pytest.raises(EmptyFixtureSet):
        sensitivity_sweep(CheckerParams(), load_fixture_set(tmp_path))


def test_bad_fixture_rows(tmp_path):
    (tmp_path / "x.json").write_text(json.dumps([{"id": "t", "group": "G_T", "s_n": 1, "s_c": 1, "label": True}]))
    with pytest.raises(SchemaMismatch):
        load_fixture_set(tmp_path)


def test_report_serializes():
    report = sensitivity_sweep(CheckerParams(), load_fixture_set(MIXED))
    d = json.loads(json.dumps(report.to_dict()))
    assert set(d["families"]) == set(FAMILIES)
    assert "baseline" in report.to_text()
