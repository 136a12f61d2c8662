"""Peridynamic / finite element optimization-based coupling."""

from ._core import (
    ConfigError,
    ParameterError,
    PdcError,
    SolverError,
    canned_config,
    check_gradient,
    dilatation,
    fem_stiffness,
    lps_apply,
    lps_oracle,
    point_cloud,
    run_config,
    run_text,
)

__all__ = [
    "ConfigError",
    "ParameterError",
    "PdcError",
    "SolverError",
    "canned_config",
    "check_gradient",
    "dilatation",
    "fem_stiffness",
    "lps_apply",
    "lps_oracle",
    "point_cloud",
    "run_config",
    "run_text",
]
