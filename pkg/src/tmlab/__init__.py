"""tmlab: numerical laboratory for weighted Trudinger-Moser functionals."""

from .core import (LogValue, ProblemParams, critical_alpha,
                   critical_alpha_beta, log_phi, lower_incomplete_gamma, phi,
                   phi_derivative, sphere_area)
from .profiles import (NormReport, RadialProfile, at_normalize, dilate,
                       functional, functional_gradient, functional_log,
                       grad_norm_pow, norms, norms_gradient, weighted_lp_pow)

__version__ = "0.1.0"

__all__ = [
    "LogValue", "ProblemParams", "critical_alpha", "critical_alpha_beta",
    "log_phi", "lower_incomplete_gamma", "phi", "phi_derivative", "sphere_area",
    "NormReport", "RadialProfile", "at_normalize", "dilate", "functional",
    "functional_gradient", "functional_log", "grad_norm_pow", "norms",
    "norms_gradient", "weighted_lp_pow", "__version__",
]
