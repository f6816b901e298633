"""Delay-violation analysis and simulation for multiuser AMC scheduling."""

from ._core import (
    AmcMode,
    MmppSource,
    NumericError,
    SpecError,
    analyze,
    d_constant,
    db_to_linear,
    delay_exponent,
    fit_per_params,
    ge_limit_arrival,
    linear_to_db,
    normalize_spec,
    optimize,
    optimize_full_csi,
    per_model,
    service_probs,
    simulate,
    standard_modes,
    sweep,
    to_csv,
)

__all__ = [
    "AmcMode",
    "MmppSource",
    "NumericError",
    "SpecError",
    "analyze",
    "d_constant",
    "db_to_linear",
    "delay_exponent",
    "fit_per_params",
    "ge_limit_arrival",
    "linear_to_db",
    "normalize_spec",
    "optimize",
    "optimize_full_csi",
    "per_model",
    "service_probs",
    "simulate",
    "standard_modes",
    "sweep",
    "to_csv",
]
