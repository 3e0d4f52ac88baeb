import numpy as np
import pytest

from crpsreg.distributions import StepCDF, step_cdf_from_sample
from crpsreg.scoring import crps_step_exact


def random_step_cdf(rng, n_atoms=None, lo=-2.0, hi=2.0):
    """Step CDF with random atoms and random masses."""
    if n_atoms is None:
        n_atoms = int(rng.integers(1, 12))
    support = np.sort(rng.uniform(lo, hi, size=n_atoms))
    support = np.unique(support)
    masses = rng.uniform(0.05, 1.0, size=support.size)
    return step_cdf_from_sample(support, weights=masses)


def expected_crps_mixture(f, g):
    """Independent oracle for the expected CRPS against a discrete truth:
    the mass-weighted sum of exact per-outcome scores."""
    return float(sum(mass * crps_step_exact(f, y)
                     for y, mass in zip(g.support, g.jump_masses)))


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)
