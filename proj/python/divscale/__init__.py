"""Python bindings for the divscale engine."""

from ._divscale import (
    AssumptionError,
    BackendError,
    CapabilityError,
    ConfigError,
    DatasetError,
    DimensionError,
    Error,
    InsufficientLength,
    InvalidArgument,
    UndefinedSimilarity,
    cosine_similarity,
    critical_threshold,
    derive_seed,
    empirical_crossover,
    exact_match,
    expected_min_em,
    mae,
    majority_vote,
    mc_expected_min,
    mse,
    perturb,
    sample_seasonal_ar,
    stl_decompose,
)

__all__ = [name for name in dir() if not name.startswith("_")]
