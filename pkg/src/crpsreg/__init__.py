"""CRPS-based distributional regression: scoring, estimators, risk bounds,
and a Monte Carlo convergence-rate harness."""

__version__ = "0.1.0"

from .distributions import (
    GPDParams,
    StepCDF,
    WeightFn,
    binary_step_cdf,
    gpd_cdf,
    gpd_mean,
    gpd_quantile,
    gpd_sample,
    gpd_survival,
    l2_cdf_distance_sq,
    step_cdf_from_sample,
)
from .scoring import (
    brier_of_binary,
    crps,
    crps_dispersion,
    crps_gpd,
    crps_quadrature,
    crps_step_exact,
    expected_crps,
    expected_crps_gpd_formula,
    project_to_binary,
    wcrps,
)
from .regressors import (
    ClassParams,
    KernelConfig,
    KnnConfig,
    TrainingSet,
    kernel_constant_cd,
    kernel_predict,
    knn_constant_cd,
    knn_predict,
    optimal_bandwidth,
    optimal_k,
    rate_constant_kernel,
    rate_constant_knn,
    rate_exponent,
    unit_ball_volume,
    upper_bound_kernel,
    upper_bound_knn,
)
from .experiments import (
    ConditionalModel,
    ExperimentConfig,
    RateFit,
    binary_smooth_model,
    bound_check,
    excess_risk_mc,
    fit_rate,
    gpd_linear_model,
    run_experiment,
    sample_training,
    true_cdf,
)
