from pathlib import Path

import numpy as np
import pytest

from crpsreg.distributions import (
    GPDParams,
    StepCDF,
    WeightFn,
    binary_step_cdf,
    step_cdf_from_sample,
)
from crpsreg.scoring import (
    brier_of_binary,
    crps_dispersion,
    crps_gpd,
    crps_quadrature,
    crps_step_exact,
    expected_crps,
    expected_crps_gpd_formula,
    project_to_binary,
    wcrps,
)

from conftest import expected_crps_mixture, random_step_cdf

GOLDEN = Path(__file__).parent / "data" / "golden_crps_gpd.txt"

XI_GRID = [-0.5, -0.2, 1e-6, 0.2, 0.5, 0.9]
SIGMA_GRID = [0.5, 1.0, 5.0]
Y_GRID = [0.0, 0.1, 1.0, 10.0]


class TestCrpsQuadrature:
    def test_perfect_point_forecast(self):
        f = step_cdf_from_sample([2.5])
        assert crps_quadrature(f, 2.5) == pytest.approx(0.0, abs=1e-12)

    def test_binary_forecast_at_zero(self):
        # two-atom forecast on {0, L} scored at y = 0 gives L * p^2
        for level, p in [(1.0, 0.3), (2.0, 0.6)]:
            f = StepCDF([0.0, level], [1.0 - p, 1.0])
            assert crps_quadrature(f, 0.0) == pytest.approx(level * p * p,
                                                            abs=1e-8)

    def test_infinite_mean_rejected(self):
        with pytest.raises(ValueError, match="infinite mean"):
            crps_quadrature(GPDParams(1.2, 1.0), 1.0)


class TestCrpsStepExact:
    def test_point_mass(self):
        assert crps_step_exact(step_cdf_from_sample([3.0]), 3.0) == 0.0

    def test_single_piece(self):
        f = StepCDF([0.0, 1.0], [0.7, 1.0])
        assert crps_step_exact(f, 0.0) == pytest.approx(0.09)

    def test_matches_quadrature(self, rng):
        for _ in range(25):
            f = random_step_cdf(rng, n_atoms=20)
            y = rng.uniform(-3.0, 3.0)
            assert crps_step_exact(f, y) == pytest.approx(
                crps_quadrature(f, y), abs=1e-8)

    def test_observation_outside_support(self):
        f = step_cdf_from_sample([1.0])
        assert crps_step_exact(f, 4.0) == pytest.approx(3.0)
        assert crps_step_exact(f, -2.0) == pytest.approx(3.0)


class TestCrpsGpd:
    @pytest.mark.parametrize("xi", XI_GRID)
    @pytest.mark.parametrize("sigma", SIGMA_GRID)
    @pytest.mark.parametrize("y", Y_GRID)
    def test_matches_quadrature_on_grid(self, xi, sigma, y):
        params = GPDParams(xi, sigma)
        assert crps_gpd(params, y) == pytest.approx(
            crps_quadrature(params, y), abs=1e-6)

    def test_branch_continuity_near_zero_shape(self):
        near = crps_gpd(GPDParams(1e-6, 1.0), 1.0)
        limit = crps_gpd(GPDParams(0.0, 1.0), 1.0)
        assert abs(near - limit) < 1e-4

    def test_negative_observation(self):
        params = GPDParams(0.3, 1.0)
        assert crps_gpd(params, -2.0) == pytest.approx(
            2.0 + crps_gpd(params, 0.0))
        assert crps_gpd(params, -2.0) == pytest.approx(
            crps_quadrature(params, -2.0), abs=1e-6)

    def test_vectorized_observations(self):
        params = GPDParams(0.2, 1.0)
        ys = np.array([-1.0, 0.0, 2.0])
        out = crps_gpd(params, ys)
        assert out.shape == ys.shape
        assert out[1] == crps_gpd(params, 0.0)

    def test_infinite_mean_rejected(self):
        with pytest.raises(ValueError, match="infinite mean"):
            crps_gpd(GPDParams(1.0, 1.0), 1.0)

    def test_golden_values(self):
        for line in GOLDEN.read_text().splitlines():
            if line.startswith("#"):
                continue
            xi, sigma, y, expected = (float(v) for v in line.split(","))
            params = GPDParams(xi, sigma)
            assert crps_gpd(params, y) == pytest.approx(expected, abs=1e-6)
            assert crps_quadrature(params, y) == pytest.approx(expected,
                                                               abs=1e-8)


class TestExpectedCrps:
    def test_gpd_bayes_risk(self):
        g = GPDParams(0.5, 1.0)
        assert expected_crps(g, g) == pytest.approx(4.0 / 3.0, abs=1e-9)
        assert crps_dispersion(g) == pytest.approx(
            g.sigma / ((2.0 - g.xi) * (1.0 - g.xi)), abs=1e-9)

    def test_step_truth_matches_monte_carlo(self, rng):
        f = random_step_cdf(rng)
        g = random_step_cdf(rng)
        result = expected_crps(f, g)
        # 10^6 draws from the discrete truth, scored exactly per atom
        draws = rng.choice(g.support.size, size=1_000_000, p=g.jump_masses)
        per_atom = np.array([crps_step_exact(f, y) for y in g.support])
        values = per_atom[draws]
        se = values.std(ddof=1) / 1000.0
        assert abs(result - values.mean()) < 3.0 * se + 1e-12

    def test_self_score_matches_monte_carlo(self, rng):
        f = random_step_cdf(rng)
        result = expected_crps(f, f)
        draws = rng.choice(f.support.size, size=1_000_000, p=f.jump_masses)
        per_atom = np.array([crps_step_exact(f, y) for y in f.support])
        values = per_atom[draws]
        se = values.std(ddof=1) / 1000.0
        assert abs(result - values.mean()) < 3.0 * se + 1e-12

    def test_strict_propriety(self, rng):
        for _ in range(1000):
            f = random_step_cdf(rng)
            g = random_step_cdf(rng)
            gap = expected_crps(f, g) - expected_crps(g, g)
            assert gap >= 0.0
            if gap <= 1e-10:
                assert f == g

    def test_divergence_identity_against_mixture_oracle(self, rng):
        for _ in range(1000):
            f = random_step_cdf(rng)
            g = random_step_cdf(rng)
            assert expected_crps(f, g) == pytest.approx(
                expected_crps_mixture(f, g), abs=1e-8)


class TestExpectedCrpsGpdFormula:
    def test_bayes_risk_value(self):
        report = expected_crps_gpd_formula(GPDParams(0.5, 1.0),
                                           GPDParams(0.5, 1.0))
        assert report.value == pytest.approx(4.0 / 3.0, abs=1e-9)

    def test_cross_parameters_match_quadrature_path(self):
        fc, truth = GPDParams(0.2, 1.0), GPDParams(0.5, 1.0)
        report = expected_crps_gpd_formula(fc, truth)
        assert report.value == pytest.approx(expected_crps(fc, truth),
                                             abs=1e-12)

    def test_propriety_inequality(self):
        report = expected_crps_gpd_formula(GPDParams(0.5, 2.0),
                                           GPDParams(0.5, 1.0))
        assert report.value >= 4.0 / 3.0

    def test_formula_readings_reported(self):
        report = expected_crps_gpd_formula(GPDParams(0.5, 1.0),
                                           GPDParams(0.5, 1.0))
        assert np.isfinite(report.formula_under_forecast)
        assert np.isfinite(report.formula_under_truth)
        assert report.matching in ("forecast", "truth", None)


class TestWeightedCrps:
    def test_constant_weight_is_crps(self, rng):
        w = WeightFn.one()
        for _ in range(1000):
            f = random_step_cdf(rng)
            y = rng.uniform(-3.0, 3.0)
            assert wcrps(f, y, w) == crps_step_exact(f, y)

    def test_point_mass_above_threshold(self):
        f = step_cdf_from_sample([2.0])
        assert wcrps(f, 2.0, WeightFn.threshold(1.0)) == 0.0

    def test_threshold_single_piece(self):
        f = StepCDF([0.0, 1.0], [0.7, 1.0])
        assert wcrps(f, 0.0, WeightFn.threshold(0.5)) == pytest.approx(0.045)

    def test_threshold_below_support_is_crps(self):
        params = GPDParams(0.2, 1.0)
        assert wcrps(params, 1.5, WeightFn.threshold(-5.0)) == pytest.approx(
            crps_quadrature(params, 1.5), abs=1e-8)


class TestProjectToBinary:
    def test_idempotent_on_binary(self):
        f = binary_step_cdf(2.0, 0.3)
        assert project_to_binary(f, 2.0) == f

    def test_uniform_gives_half(self):
        # symmetric step approximation of the uniform distribution on [0, L]
        level = 2.0
        grid = (np.arange(100) + 0.5) / 100 * level
        f = step_cdf_from_sample(grid)
        p, = project_to_binary(f, level).jump_masses[-1:]
        assert p == pytest.approx(0.5)

    def test_projection_never_hurts(self, rng):
        level_qs = [0.0, 0.25, 0.5, 0.75, 1.0]
        for _ in range(1000):
            level = rng.uniform(0.5, 3.0)
            f = random_step_cdf(rng, n_atoms=10, lo=-1.0, hi=2.0 * level)
            proj = project_to_binary(f, level)
            q = level_qs[int(rng.integers(len(level_qs)))]
            g = binary_step_cdf(level, q)
            assert expected_crps_mixture(proj, g) \
                <= expected_crps_mixture(f, g) + 1e-12

    def test_gpd_projection(self):
        params = GPDParams(0.2, 1.0)
        proj = project_to_binary(params, 1.0)
        assert proj.support[-1] <= 1.0
        g = binary_step_cdf(1.0, 0.5)
        assert expected_crps(proj, g) <= expected_crps(params, g) + 1e-8


class TestBrierOfBinary:
    def test_known_values(self):
        assert brier_of_binary(binary_step_cdf(1.0, 0.3), 0.0) \
            == pytest.approx(0.09)
        assert brier_of_binary(binary_step_cdf(1.0, 0.3), 1.0) \
            == pytest.approx(0.49)

    def test_perfect_probability(self, rng):
        for _ in range(20):
            level = rng.uniform(0.1, 5.0)
            assert brier_of_binary(binary_step_cdf(level, 1.0), level) == 0.0
            assert brier_of_binary(binary_step_cdf(level, 0.0), 0.0) == 0.0

    def test_equals_exact_crps(self, rng):
        for _ in range(1000):
            level = rng.uniform(0.1, 5.0)
            p = rng.uniform(0.0, 1.0)
            y = level if rng.random() < 0.5 else 0.0
            f = binary_step_cdf(level, p)
            assert abs(brier_of_binary(f, y) - crps_step_exact(f, y)) < 1e-12

    def test_non_binary_outcome(self):
        with pytest.raises(ValueError, match="non-binary outcome"):
            brier_of_binary(binary_step_cdf(1.0, 0.3), 0.5)
