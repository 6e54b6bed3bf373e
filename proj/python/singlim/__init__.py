"""Spectral core for singular limits of stochastic evolution equations on the 2-torus."""

from ._singlim import (
    c_eps,
    c_zero,
    cubic_gap,
    forward,
    inverse,
    lambda_eps,
    noise_amp,
    ou_step,
    ou_variance,
    series,
    sigma_value,
    study_summary,
    tail_tight_cutoff,
    v_eps_weight,
    version,
    wilson,
    z_final_l2_sq,
)

__version__ = version()

__all__ = [
    "c_eps",
    "c_zero",
    "cubic_gap",
    "forward",
    "inverse",
    "lambda_eps",
    "noise_amp",
    "ou_step",
    "ou_variance",
    "series",
    "sigma_value",
    "study_summary",
    "tail_tight_cutoff",
    "v_eps_weight",
    "version",
    "wilson",
    "z_final_l2_sq",
    "__version__",
]
