"""Differential-privacy accounting for DP-SGD batch samplers.

Thin Python surface over the native core: Monte Carlo delta(epsilon)
estimation with certified confidence bounds for the balls-and-bins, Poisson,
shuffle and deterministic batch samplers, plus analytic accountants
(closed form, discretized privacy-loss distributions, threshold-family lower
bounds) and batch-assignment simulation.
"""

from ._core import (
    BnbLowerBound,
    ConfigError,
    DeltaEstimate,
    NumericalRegimeError,
    __version__,
    bnb_lower_bound,
    delta_deterministic,
    delta_gaussian,
    estimate_delta,
    min_truncation_batch,
    poisson_delta,
    simulate_batches,
    truncation_delta,
)

__all__ = [
    "BnbLowerBound",
    "ConfigError",
    "DeltaEstimate",
    "NumericalRegimeError",
    "__version__",
    "bnb_lower_bound",
    "delta_deterministic",
    "delta_gaussian",
    "estimate_delta",
    "min_truncation_batch",
    "poisson_delta",
    "simulate_batches",
    "truncation_delta",
]
