"""Numerical laboratory for multi-reference alignment under continuous
phase shifts and cyclic coordinate shifts."""

__version__ = "0.1.0"

from .divergence import (
    DivergenceEstimate,
    SandwichReport,
    curvature_ratio,
    first_moment_decompose,
    kl_monte_carlo,
    kl_sandwich,
    kl_series_lower,
    kl_series_upper,
    log_density,
)
from .errors import DomainError, InvalidArgument, MraError, ResourceLimit
from .estimators import (
    EmOptions,
    FitResult,
    SupportEstimate,
    em_fit,
    estimate_s0,
    estimate_s1,
    estimate_support,
    log_likelihood,
    modified_mle,
    spectrum_stats,
)
from .experiments import (
    LowerBoundPair,
    RateCurve,
    RatePoint,
    fit_loglog,
    lower_bound_pair,
    lower_bound_pair_discrete,
    rate_curve,
    risk_mc,
    worst_case_signal,
)
from .moments import (
    MomentTensor,
    delta_norm,
    hermite_moment_estimate,
    matched_pair_continuous,
    matched_pair_discrete,
    moment_tensor,
    moment_tensor_dense,
)
from .sampling import ModelConfig, SampleBatch, sample
from .signals import (
    CONTINUOUS,
    DISCRETE,
    ClassValidation,
    GroupElement,
    Signal,
    SignalClassParams,
    SupportSet,
    apply_shift,
    dft,
    idft,
    orbit_distance,
    project_support,
    random_signal,
    validate_class,
)

__all__ = [name for name in dir() if not name.startswith("_")]
