"""Confidence bands for simulation output distributions under input uncertainty."""

from .band import (
    ClassicKSBand,
    ConfidenceBand,
    InflatedKSBand,
    QuantileRegion,
    band_covers,
    build_classic_ks_band,
    build_inflated_band,
    extract_quantile_region,
    region_covers,
)
from .covariance import (
    SubsampleConfig,
    SubsampleCovariance,
    check_budget_rates,
    cov_from_bootstrap_matrix,
    estimate_covariance,
    nested_cov,
    optimal_config,
)
from .empirical import (
    EmpiricalDistribution,
    Grid,
    ecdf_eval,
    resample,
    step_sup_distance,
    uniform_grid,
)
from .limiting import (
    CovarianceEstimate,
    kolmogorov_quantile,
    max_stat_quantile,
    sample_brownian_bridge_at,
    sample_gaussian,
)
from .models import (
    FiniteHorizonModel,
    InputDataset,
    builtin_model,
    mm1_output,
    simulate,
    simulate_batch,
    true_input_distributions,
)

__version__ = "0.1.0"
