"""Outage analysis of AF three-slot two-way relaying under co-channel interference.

Two independent routes to the outage probability at terminal T1: a Monte
Carlo simulator of the signal model and closed-form expressions for the
outage lower bound and its small-threshold asymptote, with a quadrature
oracle used to certify the closed forms.
"""

from .analytics import asymptotic_outage, lower_bound_outage, p1, p2, theta_k, xi_j
from .mc_sim import Estimator, OutageEstimate, estimate_outage
from .scenario import (
    ConfigError,
    DerivedConstants,
    InterferenceProfile,
    SystemConfig,
    build_geometry,
    derive_constants,
    mixture_coefficients,
)

__all__ = [
    "ConfigError", "DerivedConstants", "Estimator", "InterferenceProfile",
    "OutageEstimate", "SystemConfig", "asymptotic_outage", "build_geometry",
    "derive_constants", "estimate_outage", "lower_bound_outage",
    "mixture_coefficients", "p1", "p2", "theta_k", "xi_j",
]
