"""Operator-splitting solvers for basis pursuit and their asymptotic rates."""

from .angle_estimation import AngleEstimate, AngleMethod, estimate_angle, estimate_angle_dense
from .estimators import BasisPursuit, RateAnalyzer
from .harness import (ExperimentSpec, RateReport, generate_instance, run_experiment,
                      sweep_rates, verify_uniqueness)
from .operators import AffineConstraint, ProxParams, soft_threshold
from .problem import ProblemInstance, SupportInfo
from .rate_theory import (compute_geometry, optimal_parameters, predict_rate, rho_closed_form,
                          rho_gdr_closed_form, rip_bound)
from .solvers import SolverConfig, Variant, solve

__version__ = "0.1.0"

__all__ = [
    "AffineConstraint", "AngleEstimate", "AngleMethod", "BasisPursuit", "ExperimentSpec",
    "ProblemInstance", "ProxParams", "RateAnalyzer", "RateReport", "SolverConfig",
    "SupportInfo", "Variant", "compute_geometry", "estimate_angle", "estimate_angle_dense",
    "generate_instance", "optimal_parameters", "predict_rate", "rho_closed_form",
    "rho_gdr_closed_form", "rip_bound", "run_experiment", "soft_threshold", "solve",
    "sweep_rates", "verify_uniqueness",
]
