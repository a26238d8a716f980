import json
import math

import pytest

from grenander.experiments import (
    ExperimentPlan,
    PlanError,
    TheoremViolation,
    coverage_table,
    coverage_threshold,
    dkw_bound,
    dkw_table,
    risk_bound,
    risk_curve,
    run_plan,
    write_plotdata,
)
from grenander.metrics import TrialMetrics

SMALL = ExperimentPlan(models=("uniform", "powerlaw:alpha=0.75"), n_values=(1, 10, 100), reps=120, seed=5)


@pytest.fixture(scope="module")
def small_result():
    return run_plan(SMALL, workers=1)


def test_bound_arithmetic():
    assert risk_bound(100) == pytest.approx(0.2507, abs=5e-5)
    assert risk_bound(10_000) == pytest.approx(0.02507, abs=5e-6)
    assert coverage_threshold(0.5, 100) == pytest.approx(math.sqrt(2 * math.log(4)) / 10)
    assert dkw_bound(0.0) == 2.0
    assert dkw_bound(1.0) == pytest.approx(0.2707, abs=5e-5)


class TestPlan:
    @pytest.mark.parametrize(
        "changes",
        [{"reps": 0}, {"n_values": ()}, {"n_values": (0,)}, {"alpha_levels": (1.0,)},
         {"models": ("bogus",)}, {"seed": -1}, {"lambda_grid": (-1.0,)}],
    )
    def test_validation(self, changes):
        with pytest.raises(PlanError):
            ExperimentPlan.from_dict({**SMALL.to_dict(), **changes})

    def test_json_roundtrip(self, tmp_path):
        path = tmp_path / "plan.json"
        path.write_text(json.dumps(SMALL.to_dict()))
        assert ExperimentPlan.from_json(path) == SMALL

    def test_single_model_field(self):
        assert ExperimentPlan.from_dict({"model": "uniform"}).models == ("uniform",)

    def test_unknown_field(self):
        with pytest.raises(PlanError):
            ExperimentPlan.from_dict({"repz": 3})


def test_all_trials_certified(small_result):
    assert len(small_result.trials) == 2 * 3 * 120
    assert small_result.summary.min_slack_theorem >= -1e-10
    assert small_result.summary.min_slack_marshall >= -1e-9


def test_summary_rows(small_result):
    s = small_result.summary
    assert len(s.risk) == 6 and len(s.dkw) == 6 * 4 and len(s.coverage) == 6 * 3
    assert all(0.0 <= r.frequency <= 1.0 for r in s.dkw)
    assert all(0.0 <= r.coverage <= 1.0 for r in s.coverage)
    assert s.passed


def test_worker_count_does_not_matter(small_result):
    again = run_plan(SMALL, workers=2)
    assert again.summary.to_json() == small_result.summary.to_json()
    assert [t.csv_row() for t in again.trials] == [t.csv_row() for t in small_result.trials]


def test_tables_are_order_independent(small_result):
    shuffled = list(reversed(small_result.trials))
    assert risk_curve(shuffled) == risk_curve(small_result.trials)
    assert dkw_table(shuffled, [1.0]) == dkw_table(small_result.trials, [1.0])


def test_dkw_edge_rows(small_result):
    rows = dkw_table(small_result.trials, [0.0, 10.0])
    assert all(r.frequency <= 1.0 and r.bound == 2.0 for r in rows if r.lam == 0.0)
    assert all(r.frequency == 0.0 for r in rows if r.lam == 10.0)


def test_coverage_near_one(small_result):
    rows = coverage_table(small_result.trials, [0.999])
    for r in rows:
        assert r.threshold == pytest.approx(math.sqrt(2 * math.log(2 / 0.999) / r.n))
        assert r.passed


def test_empty_tables_rejected():
    with pytest.raises(ValueError):
        dkw_table([], [1.0])
    with pytest.raises(ValueError):
        coverage_table([], [0.05])


def test_trial_log_streamed(tmp_path):
    path = tmp_path / "trials.csv"
    result = run_plan(ExperimentPlan(models=("uniform",), n_values=(5,), reps=3, seed=1), log_path=path)
    lines = path.read_text().splitlines()
    assert lines[0] == TrialMetrics.csv_header()
    assert lines[1:] == [t.csv_row() for t in result.trials]


def test_violation_aborts(monkeypatch, tmp_path):
    import grenander.experiments as ex

    def broken(spec, n, seed, start, stop):
        return [TrialMetrics(n, seed, r, spec, 0.9, 0.1, 0.1, -0.7, 0.0) for r in range(start, stop)]

    monkeypatch.setattr(ex, "_run_block", broken)
    path = tmp_path / "trials.csv"
    with pytest.raises(TheoremViolation) as info:
        run_plan(ExperimentPlan(models=("uniform",), n_values=(5,), reps=2, seed=3), workers=1, log_path=path)
    assert "seed=3" in str(info.value) and "replicate=0" in str(info.value)
    assert len(path.read_text().splitlines()) == 3


def test_plotdata(small_result, tmp_path):
    write_plotdata(small_result.summary, tmp_path)
    for name in ("risk_curve", "dkw_tail", "coverage"):
        lines = (tmp_path / f"{name}.csv").read_text().splitlines()
        assert lines[0] == "series,x,y" and len(lines) > 1


def test_same_seed_same_summary():
    plan = ExperimentPlan(models=("texp:lambda=2.0",), n_values=(20,), reps=1, seed=11)
    assert run_plan(plan).summary.to_json() == run_plan(plan).summary.to_json()
