"""Distributional regression estimators (k-NN and uniform kernel) together
with the non-asymptotic risk bounds and their optimal tuning constants."""

import math
from dataclasses import dataclass

import numpy as np

from .distributions import StepCDF, step_cdf_from_sample


@dataclass(frozen=True)
class TrainingSet:
    """n covariate/outcome pairs with covariates in the unit cube."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.atleast_2d(np.asarray(self.xs, dtype=float))
        ys = np.asarray(self.ys, dtype=float)
        if xs.shape[0] != ys.shape[0]:
            raise ValueError("xs and ys must have the same length")
        if xs.shape[0] == 0:
            raise ValueError("training set must be nonempty")
        if np.any(xs < 0) or np.any(xs > 1):
            raise ValueError("covariates must lie in [0, 1]^d")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self):
        return self.xs.shape[0]

    @property
    def d(self):
        return self.xs.shape[1]


@dataclass(frozen=True)
class ClassParams:
    """Smoothness class: Hölder exponent h, Hölder constant C, dispersion
    bound M, covariate dimension d."""

    h: float
    C: float
    M: float
    d: int

    def __post_init__(self):
        if not 0 < self.h <= 1:
            raise ValueError("h must lie in (0, 1]")
        if self.C <= 0 or self.M <= 0:
            raise ValueError("C and M must be positive")
        if self.d < 1:
            raise ValueError("d must be a positive integer")


@dataclass(frozen=True)
class KnnConfig:
    k: int
    tie_seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")


@dataclass(frozen=True)
class KernelConfig:
    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")


def _sq_distances(train, x):
    x = np.asarray(x, dtype=float).reshape(1, -1)
    if x.shape[1] != train.d:
        raise ValueError("query dimension does not match training set")
    diff = train.xs - x
    return np.einsum("ij,ij->i", diff, diff)


def knn_predict(train, x, cfg):
    """Empirical CDF of the outcomes at the k nearest neighbors of x.

    Exact ties at the k-th distance are broken by a seeded uniform choice
    among the tied candidates.
    """
    k = cfg.k
    if k > train.n:
        raise ValueError("k exceeds sample size")
    d2 = _sq_distances(train, x)
    if k == train.n:
        return step_cdf_from_sample(train.ys)
    kth = np.partition(d2, k - 1)[k - 1]
    inside = np.flatnonzero(d2 < kth)
    tied = np.flatnonzero(d2 == kth)
    need = k - inside.size
    if need == tied.size:
        chosen = tied
    else:
        rng = np.random.default_rng(cfg.tie_seed)
        chosen = rng.choice(tied, size=need, replace=False)
    idx = np.concatenate((inside, chosen))
    return step_cdf_from_sample(train.ys[idx])


def kernel_predict(train, x, cfg):
    """Empirical CDF of the outcomes whose covariates fall in the closed
    ball B(x, bandwidth); falls back to the full-sample CDF when empty."""
    d2 = _sq_distances(train, x)
    mask = d2 <= cfg.bandwidth * cfg.bandwidth
    if not mask.any():
        return step_cdf_from_sample(train.ys)
    return step_cdf_from_sample(train.ys[mask])


def unit_ball_volume(d):
    """Volume of the Euclidean unit ball in R^d."""
    if d < 1:
        raise ValueError("d must be a positive integer")
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def knn_constant_cd(d):
    """Geometry constant in the k-NN risk bound for d >= 2."""
    if d < 2:
        raise ValueError("c_d defined for d >= 2")
    return 2.0 ** (3.0 + 2.0 / d) * (1.0 + math.sqrt(d)) ** 2 \
        / unit_ball_volume(d) ** (2.0 / d)


def upper_bound_knn(n, k, cp):
    """Non-asymptotic excess-risk bound for the k-NN estimator."""
    if not 1 <= k <= n:
        raise ValueError("require 1 <= k <= n")
    h, C, M, d = cp.h, cp.C, cp.M, cp.d
    if d == 1:
        return 8.0 ** h * C * C * (k / n) ** h + M / k
    return knn_constant_cd(d) ** h * C * C * (k / n) ** (2.0 * h / d) + M / k


def optimal_k_real(n, cp):
    """Bound-minimizing neighbor count before rounding."""
    h, C, M, d = cp.h, cp.C, cp.M, cp.d
    if d == 1:
        return (M / (h * C * C * 8.0 ** h)) ** (1.0 / (h + 1.0)) \
            * n ** (h / (h + 1.0))
    cd = knn_constant_cd(d)
    return (M * d / (2.0 * h * C * C * cd ** h)) ** (d / (2.0 * h + d)) \
        * n ** (2.0 * h / (2.0 * h + d))


def optimal_k(n, cp):
    """optimal_k_real rounded to the nearest integer, clamped to [1, n]."""
    return int(min(max(round(optimal_k_real(n, cp)), 1), n))


def kernel_constant_cd(d):
    """Covering constant in the kernel risk bound."""
    if d < 1:
        raise ValueError("d must be a positive integer")
    return float(d) ** (d / 2.0)


def upper_bound_kernel(n, bandwidth, cp):
    """Non-asymptotic excess-risk bound for the uniform-kernel estimator."""
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    h, C, M, d = cp.h, cp.C, cp.M, cp.d
    variance = kernel_constant_cd(d) * (2.0 * M + C * d ** (h / 2.0) + M / n) \
        / (n * bandwidth ** d)
    bias = C * C * bandwidth ** (2.0 * h)
    return variance + bias


def optimal_bandwidth(n, cp):
    """Bound-minimizing bandwidth; decreasing in n."""
    h, C, M, d = cp.h, cp.C, cp.M, cp.d
    inner = kernel_constant_cd(d) * d * (M + C * d ** (h / 2.0) + M / n) \
        / (2.0 * h * C * C)
    return inner ** (1.0 / (2.0 * h + d)) * n ** (-1.0 / (2.0 * h + d))


def rate_exponent(method, cp):
    """Exponent of the optimally tuned excess-risk rate n^exponent."""
    h, d = cp.h, cp.d
    if method == "knn" and d == 1:
        return -h / (h + 1.0)
    return -2.0 * h / (2.0 * h + d)


def rate_constant_knn(cp):
    """Leading constant B with the optimally tuned k: the bound becomes
    B * n^rate_exponent."""
    h, C, M, d = cp.h, cp.C, cp.M, cp.d
    if d == 1:
        return C ** (2.0 / (h + 1.0)) * M ** (h / (h + 1.0)) * (
            8.0 ** (h / (h + 1.0)) * h ** (-h / (h + 1.0))
            + (8.0 ** h * h) ** (1.0 / (h + 1.0)))
    cd = knn_constant_cd(d)
    e = d / (2.0 * h + d)
    return (C * C * cd ** h) ** e * M ** (2.0 * h / (2.0 * h + d)) * (
        (d / (2.0 * h)) ** (2.0 * h / (2.0 * h + d))
        + (2.0 * h / d) ** e)


def rate_constant_kernel(n, cp):
    """Leading constant B with the optimally tuned bandwidth."""
    h, C, M, d = cp.h, cp.C, cp.M, cp.d
    q = kernel_constant_cd(d) * (2.0 * M + C * d ** (h / 2.0) + M / n)
    e = 2.0 * h / (2.0 * h + d)
    ratio = d / (2.0 * h)
    return C ** (2.0 * d / (2.0 * h + d)) * q ** e * (
        ratio ** (-d / (2.0 * h + d)) + ratio ** e)
