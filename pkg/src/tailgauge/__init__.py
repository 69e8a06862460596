"""Tail-index regression with degeneracy-aware inference, tail rank-condition
diagnostics, and extremal-quantile-framework comparisons."""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    ConvergenceError,
    DomainError,
    EvaluationOverflowError,
    ExperimentError,
    IngestionError,
    InsufficientTailError,
    InvalidDGPError,
    RankDeficiencyError,
    TailgaugeError,
)
from .models import (
    BUILTIN_DGP_NAMES,
    ExtremalQuantileDGP,
    ObservationSet,
    RectangleLaw,
    TailIndexDGP,
    UniformLaw,
    UniformTailOracle,
    builtin_dgp,
    conditional_quantile,
    density_bound_envelope,
    dgp_from_config,
    extremal_finite_w_density,
    extremal_limit_density,
    oracle_conditional_density,
    oracle_conditional_moments,
    pareto_rectangle_dgp,
    sample_extremal_quantile,
    sample_tail_index,
)
from .estimator import (
    TailIndexFit,
    TailThreshold,
    ThresholdSpec,
    confidence_intervals,
    exponential_residuals,
    fit,
    hessian,
    objective,
    resolve_threshold,
    score,
    standardized_estimate,
)
from .diagnostics import (
    HistogramDensity,
    ModePartition,
    conditional_gram,
    conditional_variance,
    decay_rate_fit,
    decay_slope,
    histogram_density,
    multimode_variance,
    tail_condition_report,
)
from .montecarlo import (
    CoverageConfig,
    ExperimentConfig,
    RateConfig,
    run_coverage_experiment,
    run_rank_experiment,
    run_rate_experiment,
)
from .extremal import (
    compare_conditional_quantiles,
    limit_density_moments,
    verify_nondegeneracy,
)
from .empirics import (
    ReturnSeries,
    left_tail_report,
    load_price_series,
    mode_presets,
    subperiod,
    synthetic_returns,
)

__all__ = [name for name in dir() if not name.startswith("_")]
