"""Numerical laboratory for the porous medium equation near its zero set.

Exponent algebra, Barenblatt oracles, a conservative explicit solver,
anisotropic Lebesgue norms, intrinsic rescaling and oscillation-decay
regularity estimators.
"""
from .errors import CFLViolation, DomainError, NumericalFailure
from .exponents import (ExponentConfig, UniversalConstants, admissible, barenblatt_exponents,
                        localization_margin, q_lower_bound, sigma_of, universal_rho_delta,
                        violated_conditions)
from .field import Field, Grid, load_snapshot, save_snapshot
from .exact import BarenblattParams, BarenblattSolution, barenblatt_eval, heat_reference
from .norms import Cylinder, MixedNormSpec, lpq_norm
from .solver import PMEProblem, cfl_dt, mass, solve, step_explicit, weak_residual
from .scaling import ScalingParams, gamma_of, normalize, rescale_field, rescaled_source_factor
from .regularity import (IntrinsicCylinder, cascade_check, caloric_gap, detect_zero_set,
                         estimate_exponent, oscillation, regularity_report)

__version__ = "0.1.0"

__all__ = [
    "CFLViolation", "DomainError", "NumericalFailure", "ExponentConfig", "UniversalConstants",
    "admissible", "barenblatt_exponents", "localization_margin", "q_lower_bound", "sigma_of",
    "universal_rho_delta", "violated_conditions", "Field", "Grid", "load_snapshot",
    "save_snapshot", "BarenblattParams", "BarenblattSolution", "barenblatt_eval",
    "heat_reference", "Cylinder", "MixedNormSpec", "lpq_norm", "PMEProblem", "cfl_dt", "mass",
    "solve", "step_explicit", "weak_residual", "ScalingParams", "gamma_of", "normalize",
    "rescale_field", "rescaled_source_factor", "IntrinsicCylinder", "cascade_check",
    "caloric_gap", "detect_zero_set", "estimate_exponent", "oscillation", "regularity_report",
]
