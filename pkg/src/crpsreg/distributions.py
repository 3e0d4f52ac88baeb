"""One-dimensional distribution functions: step CDFs, Generalized Pareto,
sampling, and the squared L2 distance between CDFs."""

import math
from dataclasses import dataclass

import numpy as np

from .quad import adaptive_quad

# Shape parameters closer to zero than this are routed to the
# exponential-limit formulas to avoid cancellation in (1 + xi*z/sigma)**(-1/xi).
XI_ZERO_TOL = 1e-8

# Quantile level used to truncate semi-infinite integrals.
TAIL_EPS = 1e-10

_SEED_QUANTILES = np.array(
    [0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1 - 1e-3, 1 - 1e-4, 1 - 1e-6, 1 - 1e-8]
)


@dataclass(frozen=True)
class StepCDF:
    """Finite right-continuous step distribution function.

    support holds the jump locations (strictly increasing) and cum_probs the
    cumulative values F(z_j), with the last one exactly 1.
    """

    support: np.ndarray
    cum_probs: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=float)
        cum = np.asarray(self.cum_probs, dtype=float)
        if support.ndim != 1 or support.size == 0:
            raise ValueError("support must be a nonempty 1-d array")
        if support.shape != cum.shape:
            raise ValueError("support and cum_probs must have the same length")
        if support.size > 1 and not np.all(np.diff(support) > 0):
            raise ValueError("support must be strictly increasing")
        if np.any(np.diff(cum) < 0):
            raise ValueError("cum_probs must be nondecreasing")
        if np.any(cum <= 0) or np.any(cum > 1):
            raise ValueError("cum_probs must lie in (0, 1]")
        if cum[-1] != 1.0:
            raise ValueError("last cumulative probability must be exactly 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "cum_probs", cum)

    def __call__(self, z):
        """Evaluate F(z); right-continuous, vectorized."""
        idx = np.searchsorted(self.support, z, side="right")
        padded = np.concatenate(([0.0], self.cum_probs))
        return padded[idx]

    @property
    def jump_masses(self):
        return np.diff(self.cum_probs, prepend=0.0)

    def __eq__(self, other):
        if not isinstance(other, StepCDF):
            return NotImplemented
        return (self.support.shape == other.support.shape
                and np.array_equal(self.support, other.support)
                and np.array_equal(self.cum_probs, other.cum_probs))


@dataclass(frozen=True)
class GPDParams:
    """Generalized Pareto distribution with shape xi and scale sigma > 0."""

    xi: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def has_finite_mean(self):
        return self.xi < 1

    @property
    def upper_endpoint(self):
        """Right endpoint of the support (inf when xi >= 0)."""
        if self.xi < -XI_ZERO_TOL:
            return -self.sigma / self.xi
        return math.inf


@dataclass(frozen=True)
class WeightFn:
    """Weight for the weighted CRPS: constant one, or an indicator of [t, inf)."""

    kind: str
    t: float = 0.0

    def __post_init__(self):
        if self.kind not in ("one", "threshold"):
            raise ValueError(f"unknown weight kind {self.kind!r}")

    @classmethod
    def one(cls):
        return cls("one")

    @classmethod
    def threshold(cls, t):
        return cls("threshold", float(t))


def step_cdf_from_sample(values, weights=None):
    """Empirical CDF of a sample, optionally weighted.

    The jump at each distinct value equals its normalized total weight.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empty sample")
    if weights is None:
        weights = np.ones_like(values)
    else:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != values.shape:
            raise ValueError("weights must match values in length")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
    total = weights.sum()
    if total <= 0:
        raise ValueError("degenerate weights")
    support, inverse = np.unique(values, return_inverse=True)
    masses = np.bincount(inverse, weights=weights, minlength=support.size)
    keep = masses > 0
    support, masses = support[keep], masses[keep]
    cum = np.cumsum(masses) / total
    cum[-1] = 1.0
    return StepCDF(support, cum)


def binary_step_cdf(level, p):
    """Two-atom step CDF on {0, level} with upper-atom mass p."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    if not level > 0:
        raise ValueError("level must be positive")
    if p == 0:
        return StepCDF(np.array([0.0]), np.array([1.0]))
    if p == 1:
        return StepCDF(np.array([float(level)]), np.array([1.0]))
    return StepCDF(np.array([0.0, float(level)]), np.array([1.0 - p, 1.0]))


def gpd_cdf(params, z):
    """CDF of the GPD; zero below the support, handles both signs of xi."""
    z = np.asarray(z, dtype=float)
    scaled = np.maximum(z, 0.0) / params.sigma
    if abs(params.xi) < XI_ZERO_TOL:
        out = 1.0 - np.exp(-scaled)
    else:
        base = np.maximum(1.0 + params.xi * scaled, 0.0)
        out = 1.0 - base ** (-1.0 / params.xi)
    return out if out.ndim else float(out)


def gpd_survival(params, z):
    z = np.asarray(z, dtype=float)
    scaled = np.maximum(z, 0.0) / params.sigma
    if abs(params.xi) < XI_ZERO_TOL:
        out = np.exp(-scaled)
    else:
        base = np.maximum(1.0 + params.xi * scaled, 0.0)
        out = base ** (-1.0 / params.xi)
    return out if out.ndim else float(out)


def gpd_quantile(params, u):
    """Inverse CDF at u in [0, 1)."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or np.any(u >= 1):
        raise ValueError("quantile level must lie in [0, 1)")
    if abs(params.xi) < XI_ZERO_TOL:
        out = -params.sigma * np.log1p(-u)
    else:
        out = params.sigma / params.xi * ((1.0 - u) ** (-params.xi) - 1.0)
    return out if out.ndim else float(out)


def gpd_sample(params, rng, size=None):
    """Inverse-transform sampling."""
    return gpd_quantile(params, rng.random(size))


def gpd_mean(params):
    if not params.has_finite_mean:
        raise ValueError("infinite mean")
    return params.sigma / (1.0 - params.xi)


def _survival_sq_tail(params, t):
    """Exact integral of the squared survival function over [t, inf)."""
    xi, sigma = params.xi, params.sigma
    if xi >= 2:
        return math.inf
    if abs(xi) < XI_ZERO_TOL:
        return sigma / 2.0 * math.exp(-2.0 * t / sigma)
    base = max(1.0 + xi * t / sigma, 0.0)
    return sigma / (2.0 - xi) * base ** ((xi - 2.0) / xi) if base > 0 else 0.0


def cdf_eval(dist, z):
    """Evaluate a StepCDF or GPDParams CDF at z (vectorized)."""
    if isinstance(dist, StepCDF):
        return dist(z)
    if isinstance(dist, GPDParams):
        return gpd_cdf(dist, z)
    raise TypeError(f"unsupported distribution type {type(dist).__name__}")


def integration_window(dists, extra_points=()):
    """Common truncated window and breakpoints for CDF integrals.

    Returns (lo, hi, breakpoints). GPD tails are cut at the 1 - TAIL_EPS
    quantile; the squared-survival remainder beyond hi is checked against
    the quadrature tolerance and hi is pushed out if needed.
    """
    lo = math.inf
    hi = -math.inf
    breakpoints = list(extra_points)
    gpds = []
    for dist in dists:
        if isinstance(dist, StepCDF):
            lo = min(lo, float(dist.support[0]))
            hi = max(hi, float(dist.support[-1]))
            breakpoints.extend(dist.support.tolist())
        elif isinstance(dist, GPDParams):
            gpds.append(dist)
            lo = min(lo, 0.0)
            endpoint = min(dist.upper_endpoint,
                           gpd_quantile(dist, 1.0 - TAIL_EPS))
            hi = max(hi, endpoint)
            seeds = gpd_quantile(dist, _SEED_QUANTILES)
            breakpoints.extend(np.minimum(seeds, endpoint).tolist())
        else:
            raise TypeError(f"unsupported distribution type {type(dist).__name__}")
    for p in extra_points:
        lo = min(lo, float(p))
        hi = max(hi, float(p))
    # Push the cut further out until the analytic tail remainder is negligible.
    while any(_survival_sq_tail(g, hi) > 1e-12 for g in gpds):
        hi *= 2.0
    return lo, hi, breakpoints


def _l2_step_step(f, g):
    grid = np.union1d(f.support, g.support)
    dz = np.diff(grid)
    diff = f(grid[:-1]) - g(grid[:-1])
    return float(np.sum(dz * diff * diff))


def _require_finite_mean(dist):
    if isinstance(dist, GPDParams) and not dist.has_finite_mean:
        raise ValueError("infinite mean, integral may diverge")


def l2_cdf_distance_sq(f, g):
    """Squared L2 distance between two CDFs.

    Exact piecewise integration when both are step CDFs; adaptive quadrature
    with tail truncation for any combination involving a GPD.
    """
    _require_finite_mean(f)
    _require_finite_mean(g)
    if isinstance(f, StepCDF) and isinstance(g, StepCDF):
        return _l2_step_step(f, g)
    lo, hi, brk = integration_window((f, g))

    def integrand(z):
        diff = cdf_eval(f, z) - cdf_eval(g, z)
        return diff * diff

    return adaptive_quad(integrand, lo, hi, brk)
