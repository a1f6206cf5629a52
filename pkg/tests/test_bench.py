import csv
import io
import math
import time

import numpy as np
import pytest

from stiffnet import bench, connectivity, models
from stiffnet.bench import (BENCH_CSV_HEADER, RATIO_CSV_HEADER,
                            ExperimentSpec, InitialConditionRule,
                            RuleModelMismatch, HR_BASE_POINT,
                            make_initial_condition, records_to_rows,
                            run_experiment, time_run)


def fn_model(n=10):
    return models.make_network("fn", connectivity.gen_coupling("lattice", n))


def hr_model(n=5):
    c = connectivity.gen_coupling("lattice", n, nonnegative=True)
    return models.make_network("hr", c)


class TestInitialConditions:
    def test_fn_slow_manifold(self):
        m = fn_model(50)
        u = make_initial_condition(InitialConditionRule("fn_slow_manifold",
                                                        seed=1), m)
        x, y = u[:50], u[50:]
        assert np.all((x >= -2.0) & (x <= -1.0))
        np.testing.assert_array_equal(y, 4 * x - x ** 3)

    def test_hr_zero_width_is_base_point(self):
        m = hr_model(4)
        rule = InitialConditionRule("hr_perturbed_point", seed=1,
                                    delta_width=0.0)
        u = make_initial_condition(rule, m)
        np.testing.assert_array_equal(u.reshape(3, 4).T,
                                      np.tile(HR_BASE_POINT, (4, 1)))

    def test_hr_perturbation_width(self):
        m = hr_model(30)
        rule = InitialConditionRule("hr_perturbed_point", seed=5)
        u = make_initial_condition(rule, m)
        delta = u.reshape(3, 30).T - HR_BASE_POINT
        assert np.max(np.abs(delta)) < 0.01
        assert np.max(np.abs(delta)) > 0.0

    def test_determinism(self):
        m = fn_model(20)
        rule = InitialConditionRule("fn_slow_manifold", seed=7)
        np.testing.assert_array_equal(make_initial_condition(rule, m),
                                      make_initial_condition(rule, m))

    def test_explicit_values(self):
        m = fn_model(2)
        vals = np.array([1.0, 2.0, 3.0, 4.0])
        rule = InitialConditionRule("explicit", values=vals)
        np.testing.assert_array_equal(make_initial_condition(rule, m), vals)

    def test_rule_model_mismatch(self):
        with pytest.raises(RuleModelMismatch):
            make_initial_condition(InitialConditionRule("fn_slow_manifold"),
                                   hr_model())
        with pytest.raises(RuleModelMismatch):
            make_initial_condition(
                InitialConditionRule("explicit", values=np.ones(3)),
                fn_model(2))


class TestTimeRun:
    def test_sleep_stub(self):
        d = 0.05
        timed = time_run(lambda: time.sleep(d), repetitions=3)
        assert d <= timed.seconds <= 1.5 * d

    def test_single_repetition(self):
        timed = time_run(lambda: 42, repetitions=1)
        assert timed.value == 42
        assert timed.seconds >= 0.0

    def test_median_robust_to_outlier(self):
        durations = iter([0.02, 0.02, 0.2, 0.02, 0.02])
        timed = time_run(lambda: time.sleep(next(durations)), repetitions=5)
        assert abs(timed.seconds - 0.02) <= 0.2 * 0.02 + 0.005

    def test_invalid_repetitions(self):
        with pytest.raises(ValueError):
            time_run(lambda: None, repetitions=0)


class TestExperimentSpec:
    def test_unknown_suite(self):
        with pytest.raises(ValueError):
            ExperimentSpec(suite="warp_drive")

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            ExperimentSpec(orders=[])

    def test_sweep_points(self):
        spec = ExperimentSpec(suite="tolerance_sweep",
                              tol_list=[1e-3, 1e-4, 1e-5])
        points = spec.sweep_points()
        assert [sv for sv, _ in points] == [1e-3, 1e-4, 1e-5]
        spec = ExperimentSpec(suite="single_run")
        assert len(spec.sweep_points()) == 1


class TestRunExperiment:
    def test_single_run_record_counts(self):
        spec = ExperimentSpec(suite="single_run", model_kind="fn",
                              n_list=[6], t_end=2.0, orders=[2, 3],
                              repetitions=1, m_out=50)
        records, ratio_rows = run_experiment(spec)
        assert len(records) == 4  # 2 orders x 2 strategies
        assert len(ratio_rows) == 2
        for rec in records:
            assert rec.cpu_seconds > 0
            assert math.isfinite(rec.error)
            assert rec.meta["seed"] == spec.ic_seed

    def test_fixed_step_suite(self):
        spec = ExperimentSpec(suite="step_sweep", model_kind="fn",
                              n_list=[6], m_list=[20, 40], t_end=2.0,
                              orders=[2], repetitions=1, m_out=50,
                              compute_errors=False)
        records, ratio_rows = run_experiment(spec)
        assert len(records) == 4
        assert [sv for sv, _, _, _ in ratio_rows] == [20, 40]
        for rec in records:
            assert math.isnan(rec.error)

    def test_reproducible_errors(self):
        spec = ExperimentSpec(suite="single_run", model_kind="fn",
                              n_list=[6], t_end=2.0, orders=[3],
                              repetitions=1, m_out=50)
        first, _ = run_experiment(spec)
        second, _ = run_experiment(spec)
        assert [r.error for r in first] == [r.error for r in second]

    def test_rows_match_header(self):
        spec = ExperimentSpec(suite="single_run", model_kind="fn",
                              n_list=[6], t_end=2.0, orders=[2],
                              repetitions=1, m_out=50, compute_errors=False)
        records, _ = run_experiment(spec)
        rows = records_to_rows(records)
        assert all(len(row) == len(BENCH_CSV_HEADER) for row in rows)
        assert rows[0][BENCH_CSV_HEADER.index("strategy")] == "standard"
        assert rows[1][BENCH_CSV_HEADER.index("strategy")] == "economical"
