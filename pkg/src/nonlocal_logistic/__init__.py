"""Radial numerics for a logistic equation with a nonlocal crowding term on R^N."""

from .continuation import Branch, BranchPoint, branch_continue, newton_solve, seed_solution
from .grid import RadialGrid, build_grid, norms
from .model import (
    ProblemSpec,
    RadialConvolution,
    Separable,
    Tabulated,
    make_analytic_instance,
    make_gaussian_instance,
    make_rank_one_instance,
    validate_hypotheses,
)
from .nonlocal_term import check_phi_properties, phi_eval
from .potential import radial_potential
from .problem import DiscreteProblem, discretize
from .spectral import EigenPair, principal_eigenpair
from .verify import run_suite

__all__ = [
    "Branch",
    "BranchPoint",
    "DiscreteProblem",
    "EigenPair",
    "ProblemSpec",
    "RadialConvolution",
    "RadialGrid",
    "Separable",
    "Tabulated",
    "branch_continue",
    "build_grid",
    "check_phi_properties",
    "discretize",
    "make_analytic_instance",
    "make_gaussian_instance",
    "make_rank_one_instance",
    "newton_solve",
    "norms",
    "phi_eval",
    "principal_eigenpair",
    "radial_potential",
    "run_suite",
    "seed_solution",
    "validate_hypotheses",
]
