"""Deformation-series heat kernels, Borel-Laplace resummation and torus trace formulas."""
from .borel import (
    BorelEvaluator,
    CertificationReport,
    borel_v,
    borel_values,
    growth_constant,
    laplace_resum,
    remainder_split,
    verify_watson,
)
from .defmatrix import estimate_Td, omega_matrix, quadratic_form, spectral_qf_oracle
from .errors import (
    ConditioningWarning,
    ConfigError,
    CostCapExceeded,
    DomainError,
    HeatBorelError,
    PoleError,
    ToleranceNotMet,
    TruncationWarning,
)
from .measures import DiscreteMeasure, TorusPotential, exp_moment, measure_from_fourier_coeffs
from .mehler import mehler_kernel
from .oracle import closed_form_constant, mc_simplex_estimate
from .series import DeformationConfig, heat_kernel, taylor_and_remainder, v_sum, v_term
from .torus import galerkin_spectrum, poisson_trace, trace_direct, w_hat

__all__ = [
    "BorelEvaluator", "CertificationReport", "borel_v", "borel_values", "growth_constant", "laplace_resum",
    "remainder_split", "verify_watson", "estimate_Td", "omega_matrix", "quadratic_form", "spectral_qf_oracle",
    "ConditioningWarning", "ConfigError", "CostCapExceeded", "DomainError", "HeatBorelError", "PoleError",
    "ToleranceNotMet", "TruncationWarning", "DiscreteMeasure", "TorusPotential", "exp_moment",
    "measure_from_fourier_coeffs", "mehler_kernel", "closed_form_constant", "mc_simplex_estimate",
    "DeformationConfig", "heat_kernel", "taylor_and_remainder", "v_sum", "v_term", "galerkin_spectrum",
    "poisson_trace", "trace_direct", "w_hat",
]
