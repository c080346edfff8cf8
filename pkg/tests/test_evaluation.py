import numpy as np
import pytest

from skirent import (
    DayDistribution,
    StoppingDistribution,
    build_cost_function,
    case_study_lambda_third,
    consistency,
    expected_cost_threshold,
    optimal_threshold,
    run_consistency_table,
    run_perturbation_sweep,
    sweep_true_distribution,
)
from skirent.errors import InvalidParamsError
from skirent.evaluation import ExperimentResult, ResultRow, gaussian_high_cutoff
from conftest import random_day_distribution


class TestConsistencyMetric:
    def test_point_mass_at_argmin_is_one(self, worked_example):
        t, _ = optimal_threshold(worked_example, 3)
        f = StoppingDistribution((int(t),), (1.0,))
        assert consistency(worked_example, f, 3) == pytest.approx(1.0, abs=1e-12)

    def test_always_at_least_one(self, rng):
        for _ in range(100):
            p = random_day_distribution(rng, max_day=30)
            day = int(rng.integers(1, 40))
            f = StoppingDistribution((day,), (1.0,))
            assert consistency(p, f, 6) >= 1.0 - 1e-9

    def test_threshold_policy_matches_cost_ratio(self, rng):
        # deterministic policies: the metric reduces to the threshold-cost ratio
        for _ in range(50):
            p = random_day_distribution(rng, max_day=30)
            b = int(rng.integers(2, 12))
            t = int(rng.integers(1, 35))
            f = StoppingDistribution((t,), (1.0,))
            _, best = optimal_threshold(p, b)
            expected = expected_cost_threshold(p, b, t) / best
            assert consistency(p, f, b) == pytest.approx(expected, abs=1e-9)


class TestCaseStudy:
    @pytest.mark.parametrize("b,study,comparator", [
        (6, 7.0, 8.0),
        (30, 35.0, 40.0),
        (300, 350.0, 400.0),
    ])
    def test_exact_values(self, b, study, comparator):
        got = case_study_lambda_third(b)
        assert got[0] == pytest.approx(study, abs=1e-9)
        assert got[1] == pytest.approx(comparator, abs=1e-12)

    def test_clamped_policy_beats_comparator(self):
        for b in (6, 12, 60, 300):
            study, comparator = case_study_lambda_third(b)
            assert study < comparator

    def test_rejects_misaligned_b(self):
        with pytest.raises(InvalidParamsError):
            case_study_lambda_third(8)


class TestExperimentResult:
    def test_rows_sorted_and_validated(self):
        rows = (
            ResultRow("b_fam", "pol", 2.0, 1, 1.2, 3.0),
            ResultRow("a_fam", "pol", 0.0, 0, 1.1, 2.0),
        )
        res = ExperimentResult(rows=rows, metadata={})
        assert res.rows[0].family == "a_fam"

    def test_consistency_below_one_rejected(self):
        with pytest.raises(InvalidParamsError):
            ExperimentResult(rows=(ResultRow("f", "p", 0.0, 0, 0.5, 1.0),), metadata={})

    def test_csv_format(self):
        res = ExperimentResult(
            rows=(ResultRow("fam", "pol", 0.0, 0, 1.23456789, 61.7283945),),
            metadata={})
        lines = res.to_csv().strip().splitlines()
        assert lines[0] == "family,policy,eta,trial,consistency,objective"
        assert lines[1] == "fam,pol,0,0,1.23457,61.7284"   # six significant digits

    def test_json_mirror_has_metadata(self):
        res = ExperimentResult(rows=(ResultRow("f", "p", 0.0, 0, 1.5, 2.0),),
                               metadata={"b": 50})
        import json
        obj = json.loads(res.to_json())
        assert obj["metadata"]["b"] == 50
        assert obj["rows"][0]["consistency"] == 1.5


@pytest.fixture(scope="module")
def table():
    return run_consistency_table()


@pytest.fixture(scope="module")
def small_sweep():
    return run_perturbation_sweep(eta_grid=(0.0, 4.0), n_trials=3, seed=11)


class TestConsistencyTable:
    def test_fifteen_rows(self, table):
        assert len(table.rows) == 15

    def test_ours_never_worse_than_baselines(self, table):
        for family in {r.family for r in table.rows}:
            vals = {r.policy: r.consistency for r in table.rows if r.family == family}
            assert vals["water_fill"] <= vals["majority"] + 1e-9
            assert vals["water_fill"] <= vals["mixture"] + 1e-9

    def test_reproducible(self, table):
        again = run_consistency_table()
        assert [r.consistency for r in again.rows] == [r.consistency for r in table.rows]


class TestPerturbationSweep:
    def test_row_count(self, small_sweep):
        assert len(small_sweep.rows) == 2 * 3 * 3

    def test_zero_eta_equals_unperturbed(self, small_sweep):
        p = sweep_true_distribution()
        from skirent import water_fill
        ours, _ = water_fill(build_cost_function(p, 50), 50, 1.7, exact=False)
        _, best = optimal_threshold(p, 50)
        from skirent import expected_policy_cost
        expected = expected_policy_cost(ours, build_cost_function(p, 50)) / best
        for row in small_sweep.rows:
            if row.eta == 0.0 and row.policy == "water_fill":
                assert row.consistency == pytest.approx(expected, abs=1e-12)

    def test_bit_reproducible(self, small_sweep):
        again = run_perturbation_sweep(eta_grid=(0.0, 4.0), n_trials=3, seed=11)
        assert again.to_csv() == small_sweep.to_csv()

    def test_seed_changes_results(self, small_sweep):
        other = run_perturbation_sweep(eta_grid=(0.0, 4.0), n_trials=3, seed=12)
        assert other.to_csv() != small_sweep.to_csv()

    def test_true_distribution_covers_essentially_all_mass(self):
        cutoff = gaussian_high_cutoff(90, 12)
        p = sweep_true_distribution()
        assert p.max_day <= cutoff
        # the next-larger truncation changes nothing beyond 1e-9 of mass
        assert 90 + 5 * 12 < cutoff < 90 + 8 * 12
