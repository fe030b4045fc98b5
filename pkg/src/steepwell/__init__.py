"""Radial finite-difference study of a biharmonic steep-potential-well problem.

Modules: ``radial`` (grid, fields, discrete bilaplacian), ``model`` (problem
data and energy), ``spectral`` (principal eigenvalues), ``solver`` (ground
states), ``bubble`` (critical-exponent bound), ``experiments`` (sweeps, I/O).
"""

from .model import ConfigError, IndefiniteFormError, LimitSpec, PotentialSpec, ProblemSpec
from .radial import RadialField, RadialGrid, build_grid
from .solver import SolverOptions, solve_ground_state, solve_limit_problem
from .spectral import mu_L0, mu_L_lambda, mu_zero

__all__ = [
    "ConfigError", "IndefiniteFormError", "LimitSpec", "PotentialSpec", "ProblemSpec",
    "RadialField", "RadialGrid", "build_grid", "SolverOptions", "solve_ground_state",
    "solve_limit_problem", "mu_L0", "mu_L_lambda", "mu_zero",
]
