"""Numerical tools for cylindrically symmetric gravitational waves in the
(mu, omega) / (psi, phi) formulation: evolution, closed-form families,
recovery of nu and the stationary boundary value problem."""

from .core_fields import DomainError, RadialGrid, FieldState, InitialBoundaryData
from .exact_solutions import ExactFamily, Mode, ModeSum
from .evolution import EvolutionConfig, evolve
from .stationary import StationaryProblem, solve_stationary, oracle_bvp

__version__ = "0.1.0"

__all__ = [
    "DomainError", "RadialGrid", "FieldState", "InitialBoundaryData",
    "ExactFamily", "Mode", "ModeSum", "EvolutionConfig", "evolve",
    "StationaryProblem", "solve_stationary", "oracle_bvp",
]
