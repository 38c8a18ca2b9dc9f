import csv
import math
from dataclasses import replace

import numpy as np
import pytest

from wassci.harness import (
    ExperimentConfig,
    dumps,
    generate_instance,
    mean_vector,
    run_coverage_experiment,
    run_length_experiment,
    run_robustness_experiment,
    run_timing_experiment,
    standardized_noise,
)
from wassci.numerics import trial_rng


class TestConfig:
    @pytest.mark.parametrize(
        "field,value",
        [("trials", 0), ("alpha", 0.0), ("alpha", 1.0), ("noise", "cauchy"), ("variance_mode", "guess"), ("seed", -1), ("n", 0)],
    )
    def test_invalid(self, field, value):
        with pytest.raises(ValueError):
            ExperimentConfig(**{field: value})


class TestNoise:
    @pytest.mark.parametrize("family", ["gaussian", "laplace", "skew_normal", "student_t"])
    def test_standardized(self, family):
        draws = standardized_noise(trial_rng(0, 0), family, 400_000)
        assert abs(draws.mean()) < 0.01
        assert draws.var() == pytest.approx(1.0, abs=0.02)

    def test_skew_normal_is_skewed(self):
        draws = standardized_noise(trial_rng(1, 0), "skew_normal", 200_000)
        assert ((draws - draws.mean()) ** 3).mean() > 0.5

    def test_laplace_scale(self):
        draws = standardized_noise(trial_rng(2, 0), "laplace", 400_000)
        # mean absolute deviation of a Laplace law equals its scale
        assert np.abs(draws).mean() == pytest.approx(1 / math.sqrt(2), abs=0.005)


class TestGenerateInstance:
    def test_deterministic(self):
        cfg = ExperimentConfig(n=4, m=3, d=2, delta=1.5)
        a, b = generate_instance(cfg, 5), generate_instance(cfg, 5)
        np.testing.assert_array_equal(a.x_rows, b.x_rows)
        assert not np.array_equal(a.x_rows, generate_instance(cfg, 6).x_rows)

    def test_means(self):
        cfg = ExperimentConfig(n=3, m=2, d=2, delta=2.0)
        np.testing.assert_array_equal(mean_vector(cfg), [1] * 6 + [3] * 4)
        xs = np.mean([generate_instance(cfg, i).y_rows for i in range(2000)], axis=0)
        np.testing.assert_allclose(xs, 3.0, atol=0.1)

    def test_estimated_variance(self):
        cfg = ExperimentConfig(n=50, m=50, variance_mode="estimated")
        inst = generate_instance(cfg, 0)
        assert inst.sigma_x[0, 0] == pytest.approx(1.0, abs=0.3)
        assert inst.sigma_x[0, 0] == inst.sigma_y[0, 0]


class TestCoverageExperiment:
    def test_single_trial(self):
        rep = run_coverage_experiment(ExperimentConfig(trials=1))
        agg = rep.aggregate()
        assert len(rep.records) == 1
        assert agg["selective_coverage"] in (0.0, 1.0)

    def test_counts_sum(self):
        agg = run_coverage_experiment(ExperimentConfig(trials=60, n=4, m=3, delta=1.0)).aggregate()
        assert agg["covered"] + agg["not_covered"] + agg["excluded_degenerate"] + agg["failed"] == 60
        assert 0.0 <= agg["selective_coverage"] <= 1.0
        lo, hi = agg["selective_coverage_band"]
        assert lo <= agg["selective_coverage"] <= hi

    def test_degenerate_exclusion(self):
        agg = run_coverage_experiment(ExperimentConfig(trials=20, allow_degenerate=False)).aggregate()
        # equal sample sizes make every optimal vertex degenerate
        assert agg["excluded_degenerate"] == 20
        assert agg["selective_coverage"] is None

    def test_half_level(self):
        agg = run_coverage_experiment(ExperimentConfig(trials=400, alpha=0.5, delta=2.0, seed=3)).aggregate()
        lo, hi = agg["selective_coverage_band"]
        assert lo <= 0.5 <= hi

    def test_parallel_matches_serial(self):
        cfg = ExperimentConfig(trials=30, n=4, m=4, seed=9)
        serial = dumps(run_coverage_experiment(cfg).to_json())
        parallel = dumps(run_coverage_experiment(replace(cfg, parallelism=3)).to_json())
        assert serial == parallel

    def test_trials_csv(self, tmp_path):
        rep = run_coverage_experiment(ExperimentConfig(trials=5, n=3, m=3))
        path = tmp_path / "t.csv"
        rep.write_trials_csv(path)
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == [
            "trial", "z_obs", "distance", "sel_lo", "sel_hi", "naive_lo", "naive_hi",
            "covered_sel", "covered_naive", "degenerate", "wall_ms",
        ]
        assert [int(r["trial"]) for r in rows] == list(range(5))

    def test_lengths_non_negative(self):
        rep = run_coverage_experiment(ExperimentConfig(trials=50, delta=0.0, seed=1))
        assert all(r.sel_length >= 0 for r in rep.usable)


class TestOtherExperiments:
    def test_length_sweep(self):
        out = run_length_experiment(ExperimentConfig(trials=150, seed=2), deltas=(0, 2, 4))
        lengths = [r.mean_finite_length for r in out["reports"]]
        assert lengths[2] < lengths[0]
        assert -1.0 <= out["spearman"] <= 1.0

    def test_timing_smoke(self):
        table = run_timing_experiment(ExperimentConfig(delta=2.0), sizes=(6, 12), trials=2)
        assert [row["n"] for row in table] == [6, 12]
        assert all(row["failures"] == 0 and row["median_seconds"] > 0 for row in table)

    def test_robustness_families(self):
        cfg = ExperimentConfig(trials=20, seed=4)
        out = run_robustness_experiment(cfg)
        assert set(out) == {"laplace", "skew_normal", "student_t", "estimated_variance"}
        assert out["laplace"].config.noise == "laplace"
        assert out["estimated_variance"].config.variance_mode == "estimated"

    def test_gaussian_known_is_coverage_experiment(self):
        cfg = ExperimentConfig(trials=20, seed=4)
        rob = run_robustness_experiment(cfg, families=("gaussian",), estimated=False)["gaussian"]
        assert dumps(rob.to_json()) == dumps(run_coverage_experiment(cfg).to_json())
