"""Synthetic conditional models, Monte Carlo estimation of the excess risk,
bound-domination checks, and log-log convergence-rate fitting."""

import math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .distributions import GPDParams, binary_step_cdf, l2_cdf_distance_sq
from .regressors import (
    ClassParams,
    KernelConfig,
    KnnConfig,
    TrainingSet,
    kernel_predict,
    knn_predict,
    optimal_bandwidth,
    optimal_k,
    rate_exponent,
    upper_bound_kernel,
    upper_bound_knn,
)

# Numerically certified Lipschitz constants of the GPD CDF in L2(R) with
# respect to its parameters, over xi in [0.3, 0.5], sigma in [1, 1.5]:
# the maximum L2 norms of the partial derivatives are ~0.70 and ~0.52,
# kept here with a comfortable safety margin.
_GPD_L2_LIP_XI = 1.40
_GPD_L2_LIP_SIGMA = 0.80


@dataclass(frozen=True)
class ConditionalModel:
    """Ground-truth map x -> F*_x together with its certified class."""

    kind: str  # "binary_smooth" or "gpd_linear"
    class_params: ClassParams
    # binary_smooth: P(Y = level | X = x) = base + amplitude * prod_j sin(pi x_j)
    level: float = 1.0
    base: float = 0.5
    amplitude: float = 0.4
    # gpd_linear: xi*(x) = xi0 + alpha . x, sigma*(x) = sigma0 + beta . x
    xi0: float = 0.3
    alpha: tuple = ()
    sigma0: float = 1.0
    beta: tuple = ()

    def __post_init__(self):
        if self.kind not in ("binary_smooth", "gpd_linear"):
            raise ValueError(f"unknown model kind {self.kind!r}")


def binary_smooth_model(d, level=1.0, base=0.5, amplitude=0.4):
    """Binary-outcome model with a smooth success probability.

    The probability stays in [base, base + amplitude], so C follows from the
    gradient bound amplitude * pi * sqrt(d) and the identity
    ||F*_x - F*_x'||_L2^2 = level * (m(x) - m(x'))^2.
    """
    if not (0 < base and base + amplitude < 1 and amplitude >= 0):
        raise ValueError("success probability must stay inside (0, 1)")
    C = amplitude * math.pi * math.sqrt(d) * math.sqrt(level)
    cp = ClassParams(h=1.0, C=C, M=level / 4.0, d=d)
    return ConditionalModel("binary_smooth", cp, level=level, base=base,
                            amplitude=amplitude)


def gpd_linear_model(d):
    """GPD model with shape and scale linear in the covariates.

    xi*(x) in [0.3, 0.5] and sigma*(x) in [1, 1.5] over the cube, so the
    dispersion bound is sigma/((2-xi)(1-xi)) at the worst corner and the
    Hölder constant combines the parameter gradients with the certified
    L2-Lipschitz constants of the GPD CDF.
    """
    alpha = (0.2 / d,) * d
    beta = (0.5 / d,) * d
    C = (_GPD_L2_LIP_XI * 0.2 + _GPD_L2_LIP_SIGMA * 0.5) / math.sqrt(d)
    M = 1.5 / ((2.0 - 0.5) * (1.0 - 0.5))
    cp = ClassParams(h=1.0, C=C, M=M, d=d)
    return ConditionalModel("gpd_linear", cp, xi0=0.3, alpha=alpha,
                            sigma0=1.0, beta=beta)


def _success_prob(model, xs):
    xs = np.atleast_2d(xs)
    return model.base + model.amplitude * np.prod(np.sin(np.pi * xs), axis=1)


def _gpd_params_at(model, xs):
    xs = np.atleast_2d(xs)
    xi = model.xi0 + xs @ np.asarray(model.alpha)
    sigma = model.sigma0 + xs @ np.asarray(model.beta)
    return xi, sigma


def true_cdf(model, x):
    """Conditional distribution of the outcome at covariate x."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > 1):
        raise ValueError("covariate outside [0, 1]^d")
    if model.kind == "binary_smooth":
        p = float(_success_prob(model, x)[0])
        return binary_step_cdf(model.level, p)
    xi, sigma = _gpd_params_at(model, x)
    return GPDParams(float(xi[0]), float(sigma[0]))


def sample_training(model, n, rng):
    """Draw n i.i.d. pairs with uniform covariates on the cube."""
    if n < 1:
        raise ValueError("n must be at least 1")
    d = model.class_params.d
    xs = rng.random((n, d))
    if model.kind == "binary_smooth":
        p = _success_prob(model, xs)
        ys = model.level * (rng.random(n) < p)
    else:
        xi, sigma = _gpd_params_at(model, xs)
        u = rng.random(n)
        ys = sigma / xi * ((1.0 - u) ** (-xi) - 1.0)
    return TrainingSet(xs, ys)


@dataclass(frozen=True)
class ExperimentConfig:
    model: ConditionalModel
    method: str  # "knn" or "kernel"
    tuning: str = "optimal"  # "optimal" or "fixed"
    fixed_value: float | None = None
    sample_sizes: tuple = (128, 256, 512, 1024, 2048, 4096, 8192)
    replications: int = 200
    test_points: int = 64
    master_seed: int = 0

    def __post_init__(self):
        if self.method not in ("knn", "kernel"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.tuning not in ("optimal", "fixed"):
            raise ValueError(f"unknown tuning {self.tuning!r}")
        if self.tuning == "fixed" and self.fixed_value is None:
            raise ValueError("fixed tuning requires a value")
        if self.replications < 1 or self.test_points < 1:
            raise ValueError("counts must be at least 1")
        sizes = tuple(int(n) for n in self.sample_sizes)
        if any(b <= a for a, b in zip(sizes, sizes[1:])) or not sizes:
            raise ValueError("sample_sizes must be strictly increasing")
        object.__setattr__(self, "sample_sizes", sizes)


def tuning_value(cfg, n):
    """The k or bandwidth actually used at sample size n."""
    cp = cfg.model.class_params
    if cfg.method == "knn":
        if cfg.tuning == "optimal":
            return optimal_k(n, cp)
        return int(min(max(round(cfg.fixed_value), 1), n))
    if cfg.tuning == "optimal":
        return optimal_bandwidth(n, cp)
    return float(cfg.fixed_value)


def _replication_risk(cfg, n, rep):
    """Average squared L2 error over fresh test points for one replication.

    Seeded by (master_seed, n, rep) so results are reproducible regardless
    of scheduling.
    """
    seq = np.random.SeedSequence(cfg.master_seed, spawn_key=(n, rep))
    rng = np.random.default_rng(seq)
    train = sample_training(cfg.model, n, rng)
    xs_test = rng.random((cfg.test_points, cfg.model.class_params.d))
    value = tuning_value(cfg, n)
    if cfg.method == "knn":
        tie_seed = int(rng.integers(2 ** 32))
        predict = lambda x: knn_predict(train, x, KnnConfig(value, tie_seed))
    else:
        predict = lambda x: kernel_predict(train, x, KernelConfig(value))
    errs = np.empty(cfg.test_points)
    for i, x in enumerate(xs_test):
        errs[i] = l2_cdf_distance_sq(predict(x), true_cdf(cfg.model, x))
    return float(np.sum(errs) / cfg.test_points)


def run_replications(cfg, n, n_jobs=1):
    """Per-replication excess-risk estimates at sample size n, in
    replication order (so the output is independent of n_jobs)."""
    reps = range(cfg.replications)
    if n_jobs in (None, 1):
        risks = [_replication_risk(cfg, n, r) for r in reps]
    else:
        risks = Parallel(n_jobs=n_jobs)(
            delayed(_replication_risk)(cfg, n, r) for r in reps)
    return np.asarray(risks)


def excess_risk_mc(cfg, n, n_jobs=1):
    """Monte Carlo estimate of the excess risk and its standard error."""
    risks = run_replications(cfg, n, n_jobs=n_jobs)
    estimate = float(np.mean(risks))
    se = float(np.std(risks, ddof=1) / math.sqrt(len(risks))) \
        if len(risks) > 1 else 0.0
    return estimate, se


def bound_at(cfg, n):
    """The non-asymptotic risk bound matching the configured method."""
    cp = cfg.model.class_params
    value = tuning_value(cfg, n)
    if cfg.method == "knn":
        return upper_bound_knn(n, value, cp)
    return upper_bound_kernel(n, value, cp)


@dataclass(frozen=True)
class BoundReport:
    n: int
    estimate: float
    se: float
    bound: float
    passed: bool


def bound_check(cfg, n, n_jobs=1, risks=None):
    """Check that the Monte Carlo estimate does not exceed the bound by
    more than three standard errors."""
    if risks is None:
        estimate, se = excess_risk_mc(cfg, n, n_jobs=n_jobs)
    else:
        estimate = float(np.mean(risks))
        se = float(np.std(risks, ddof=1) / math.sqrt(len(risks))) \
            if len(risks) > 1 else 0.0
    bound = bound_at(cfg, n)
    return BoundReport(n, estimate, se, bound, estimate - 3.0 * se <= bound)


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of log(risk) against log(n)."""

    slope: float
    intercept: float
    r_squared: float
    ns: tuple
    means: tuple
    ses: tuple
    bootstrap_se: float | None


def fit_rate(ns, per_rep_risks, n_boot=200, boot_seed=0):
    """Fit the empirical convergence rate from per-replication risks.

    per_rep_risks holds one array of replication values per sample size.
    The slope standard error comes from a bootstrap over replications and
    is omitted when any size has a single replication.
    """
    ns = np.asarray(ns, dtype=float)
    if ns.size < 3:
        raise ValueError("need at least 3 sample sizes to fit a rate")
    risks = [np.asarray(r, dtype=float) for r in per_rep_risks]
    means = np.array([r.mean() for r in risks])
    if np.any(means <= 0):
        raise ValueError("cannot take log")
    ses = np.array([r.std(ddof=1) / math.sqrt(r.size) if r.size > 1 else 0.0
                    for r in risks])
    log_n, log_risk = np.log(ns), np.log(means)
    slope, intercept = np.polyfit(log_n, log_risk, 1)
    fitted = slope * log_n + intercept
    ss_res = float(np.sum((log_risk - fitted) ** 2))
    ss_tot = float(np.sum((log_risk - log_risk.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    bootstrap_se = None
    if all(r.size > 1 for r in risks):
        rng = np.random.default_rng(boot_seed)
        slopes = np.empty(n_boot)
        for b in range(n_boot):
            boot_means = np.array([
                r[rng.integers(0, r.size, size=r.size)].mean() for r in risks])
            slopes[b] = np.polyfit(log_n, np.log(boot_means), 1)[0]
        bootstrap_se = float(slopes.std(ddof=1))
    return RateFit(float(slope), float(intercept), r_squared,
                   tuple(int(n) for n in ns), tuple(means), tuple(ses),
                   bootstrap_se)


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    risks: tuple  # one per-replication array per sample size
    bounds: tuple  # BoundReport per sample size
    rate_fit: RateFit
    target_slope: float
    tuning_used: tuple


def run_experiment(cfg, n_jobs=1):
    """Full sweep over the configured sample sizes."""
    risks = tuple(run_replications(cfg, n, n_jobs=n_jobs)
                  for n in cfg.sample_sizes)
    bounds = tuple(bound_check(cfg, n, risks=r)
                   for n, r in zip(cfg.sample_sizes, risks))
    rate = fit_rate(cfg.sample_sizes, risks, boot_seed=cfg.master_seed)
    target = rate_exponent(cfg.method, cfg.model.class_params)
    used = tuple(tuning_value(cfg, n) for n in cfg.sample_sizes)
    return ExperimentResult(cfg, risks, bounds, rate, target, used)
