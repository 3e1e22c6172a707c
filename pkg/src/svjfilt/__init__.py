"""Likelihood evaluation and estimation for affine jump-diffusion models.

Grid-based deterministic filtering, particle-filter benchmarking,
simulation, and maximum-likelihood estimation for the SV, SVYJ, SVCJ,
and SVCJSI model family.
"""

from .models import (
    ModelVariant,
    ModelParams,
    LatentState,
    StationaryMoments,
    PARAM_NAMES,
    ACTIVE_PARAMS,
    compensator,
    stationary_moments,
)
from .densities import (
    measurement_density,
    measurement_logpdf,
    shock_measurement_logpdf,
    poisson_pmf,
    TransitionLaws,
    transition_densities,
)
from .errors import (
    GridError,
    ZeroLikelihoodError,
    ParticleCollapseError,
    DataError,
)
from .grids import GridSpec, StateGrid, build_grid, default_grid_spec
from .gridfilter import (
    PosteriorGrid,
    FilterOutput,
    PreparedFilter,
    prepare_filter,
    initial_posterior,
    likelihood_step,
    filter_prepared,
    run_filter,
)
from .simulate import (
    SimulatedPath,
    simulate,
    sample_stationary_state,
    mc_likelihood_oracle,
)
from .particle import (
    ParticleCloud,
    resample_systematic,
    sir_likelihood,
    DEFAULT_PARTICLES,
)
from .estimate import (
    ParamTransform,
    EstimationResult,
    estimate,
    default_start,
    robust_standard_errors,
    loglik_gradient,
)
from .io import (
    ReturnSeries,
    load_returns,
    RunConfig,
    load_config,
    save_config,
    config_hash,
    stamp_line,
    write_csv,
    write_json,
    write_path_csv,
    write_filter_csv,
    estimation_payload,
    SCHEMA_VERSION,
)
from .bench import (
    ape,
    random_params,
    ApeReport,
    run_ape_study,
    SweepReport,
    run_tradeoff_sweep,
    SpeedComparison,
    matched_speed_comparison,
    BiasReport,
    run_bias_study,
    fit_power_law,
    DRAW_BOUNDS,
    QUANTILE_LEVELS,
)

__version__ = "0.1.0"

__all__ = [
    "ModelVariant", "ModelParams", "LatentState", "StationaryMoments",
    "PARAM_NAMES", "ACTIVE_PARAMS", "compensator", "stationary_moments",
    "measurement_density", "measurement_logpdf", "shock_measurement_logpdf",
    "poisson_pmf", "TransitionLaws", "transition_densities",
    "GridError", "ZeroLikelihoodError", "ParticleCollapseError", "DataError",
    "GridSpec", "StateGrid", "build_grid", "default_grid_spec",
    "PosteriorGrid", "FilterOutput", "PreparedFilter", "prepare_filter",
    "initial_posterior", "likelihood_step", "filter_prepared", "run_filter",
    "SimulatedPath", "simulate", "sample_stationary_state",
    "mc_likelihood_oracle",
    "ParticleCloud", "resample_systematic", "sir_likelihood",
    "DEFAULT_PARTICLES",
    "ParamTransform", "EstimationResult", "estimate", "default_start",
    "robust_standard_errors", "loglik_gradient",
    "ReturnSeries", "load_returns", "RunConfig", "load_config",
    "save_config", "config_hash", "stamp_line", "write_csv", "write_json",
    "write_path_csv", "write_filter_csv", "estimation_payload",
    "SCHEMA_VERSION",
    "ape", "random_params", "ApeReport", "run_ape_study",
    "SweepReport", "run_tradeoff_sweep", "SpeedComparison",
    "matched_speed_comparison", "BiasReport", "run_bias_study",
    "fit_power_law", "DRAW_BOUNDS", "QUANTILE_LEVELS",
    "__version__",
]
