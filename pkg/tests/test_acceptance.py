"""End-to-end acceptance checks.

Each test prints a single ``acceptance | <name> | PASS/FAIL`` line (visible
with ``pytest -s`` or in captured output) and enforces its runtime budget.
"""

import subprocess
import sys
import time

import numpy as np
import pytest

from crpsreg.distributions import (
    GPDParams,
    WeightFn,
    binary_step_cdf,
    gpd_sample,
    step_cdf_from_sample,
)
from crpsreg.experiments import (
    ExperimentConfig,
    binary_smooth_model,
    run_experiment,
)
from crpsreg.regressors import KnnConfig, TrainingSet, knn_predict
from crpsreg.scoring import (
    brier_of_binary,
    crps_gpd,
    crps_quadrature,
    crps_step_exact,
    project_to_binary,
    wcrps,
)

from conftest import expected_crps_mixture, random_step_cdf

SEED = 20260823
SLOPE_TOL = 0.15

SWEEPS = (
    ("knn", 1, -0.5),
    ("knn", 2, -0.5),
    ("kernel", 1, -2.0 / 3.0),
    ("kernel", 2, -0.5),
)


def report(name, ok):
    print(f"acceptance | {name} | {'PASS' if ok else 'FAIL'}")
    assert ok


@pytest.fixture(scope="module")
def rate_sweeps():
    """Four convergence sweeps: method x dimension, optimally tuned."""
    results = {}
    for method, d, target in SWEEPS:
        cfg = ExperimentConfig(
            binary_smooth_model(d), method,
            sample_sizes=tuple(2 ** k for k in range(7, 14)),
            replications=200, test_points=64, master_seed=SEED)
        started = time.perf_counter()
        results[(method, d)] = (run_experiment(cfg, n_jobs=4), target,
                                time.perf_counter() - started)
    return results


class TestClosedForms:
    def test_gpd_closed_form_matches_quadrature(self):
        started = time.perf_counter()
        worst = 0.0
        for xi in (-0.5, -0.2, 1e-6, 0.2, 0.5, 0.9):
            for sigma in (0.5, 1.0, 5.0):
                params = GPDParams(xi, sigma)
                for y in (0.0, 0.1, 1.0, 10.0):
                    gap = abs(crps_gpd(params, y)
                              - crps_quadrature(params, y))
                    worst = max(worst, gap)
        elapsed = time.perf_counter() - started
        report("gpd closed form vs quadrature (72 cases)",
               worst < 1e-6 and elapsed < 5.0)

    def test_gpd_bayes_risk_monte_carlo(self):
        started = time.perf_counter()
        params = GPDParams(0.5, 1.0)
        rng = np.random.default_rng(SEED)
        scores = crps_gpd(params, gpd_sample(params, rng, size=1_000_000))
        se = scores.std(ddof=1) / 1000.0
        elapsed = time.perf_counter() - started
        report("self-scored gpd mean vs 4/3 (1e6 draws)",
               abs(scores.mean() - 4.0 / 3.0) < 3.0 * se and elapsed < 30.0)

    def test_two_atom_crps_equals_scaled_brier(self):
        started = time.perf_counter()
        rng = np.random.default_rng(SEED)
        worst = 0.0
        for _ in range(1000):
            level = rng.uniform(0.1, 5.0)
            p = rng.uniform(0.0, 1.0)
            y = level if rng.random() < 0.5 else 0.0
            f = binary_step_cdf(level, p)
            worst = max(worst,
                        abs(crps_step_exact(f, y) - brier_of_binary(f, y)))
        elapsed = time.perf_counter() - started
        report("two-atom crps equals scaled brier (1e3 cases)",
               worst < 1e-12 and elapsed < 1.0)

    def test_binary_projection_never_hurts(self):
        started = time.perf_counter()
        rng = np.random.default_rng(SEED)
        ok = True
        for _ in range(1000):
            level = rng.uniform(0.5, 3.0)
            f = random_step_cdf(rng, n_atoms=10, lo=-1.0, hi=2.0 * level)
            proj = project_to_binary(f, level)
            q = rng.uniform(0.0, 1.0)
            g = binary_step_cdf(level, q)
            ok &= (expected_crps_mixture(proj, g)
                   <= expected_crps_mixture(f, g) + 1e-12)
        elapsed = time.perf_counter() - started
        report("binary projection never increases expected score (1e3 trials)",
               ok and elapsed < 10.0)

    def test_constant_weight_recovers_plain_score(self):
        started = time.perf_counter()
        rng = np.random.default_rng(SEED)
        w = WeightFn.one()
        ok = True
        for _ in range(1000):
            f = random_step_cdf(rng)
            y = rng.uniform(-3.0, 3.0)
            ok &= wcrps(f, y, w) == crps_step_exact(f, y)
        elapsed = time.perf_counter() - started
        report("unit-weight score identical to plain score (1e3 cases)",
               ok and elapsed < 1.0)


class TestRegression:
    def test_knn_matches_brute_force(self):
        started = time.perf_counter()
        rng = np.random.default_rng(SEED)
        ok = True
        for _ in range(100):
            n = int(rng.integers(10, 201))
            d = int(rng.integers(1, 6))
            train = TrainingSet(rng.random((n, d)), rng.normal(size=n))
            x = rng.random(d)
            k = int(rng.integers(1, n + 1))
            d2 = np.sum((train.xs - x) ** 2, axis=1)
            order = np.argsort(d2)
            ok &= knn_predict(train, x, KnnConfig(k)) \
                == step_cdf_from_sample(train.ys[order[:k]])
        elapsed = time.perf_counter() - started
        report("knn estimator matches brute-force sort (100 instances)",
               ok and elapsed < 5.0)


class TestRates:
    @pytest.mark.parametrize("method,d,target", SWEEPS)
    def test_empirical_slope_matches_theory(self, rate_sweeps, method, d,
                                            target):
        result, _, elapsed = rate_sweeps[(method, d)]
        slope = result.rate_fit.slope
        report(f"{method} d={d} slope {slope:.4f} vs target {target:.4f}",
               abs(slope - target) <= SLOPE_TOL and elapsed < 300.0)

    @pytest.mark.parametrize("method,d,target", SWEEPS)
    def test_estimates_stay_below_bounds(self, rate_sweeps, method, d,
                                         target):
        result, _, _ = rate_sweeps[(method, d)]
        report(f"{method} d={d} per-n estimates below risk bound",
               all(b.passed for b in result.bounds))


class TestCli:
    def test_thread_count_does_not_change_results(self, tmp_path):
        cfg = tmp_path / "exp.ini"
        cfg.write_text(
            "[model]\nkind = binary_smooth\nd = 1\n\n"
            "[method]\nname = knn\ntuning = optimal\n\n"
            "[run]\nsample_sizes = 64,128,256\nreplications = 8\n"
            "test_points = 8\nmaster_seed = 20260823\n")
        outputs = []
        for threads, sub in ((1, "a"), (8, "b")):
            proc = subprocess.run(
                [sys.executable, "-m", "crpsreg.cli", "experiment", str(cfg),
                 "--out", str(tmp_path / sub), "--threads", str(threads)],
                capture_output=True, text=True)
            assert proc.returncode == 0, proc.stderr
            outputs.append((tmp_path / sub / "results.csv").read_bytes())
        report("cli experiment byte-identical across 1 vs 8 threads",
               outputs[0] == outputs[1])
