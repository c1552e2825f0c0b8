"""A problem instance bound to a radial grid, with the tables every solver needs."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .grid import DiscreteLaplacian, RadialGrid, build_grid
from .model import ProblemSpec

DEFAULT_GRID = {"R_max": 200.0, "M": 2000, "stretch": 20.0}


@dataclass(frozen=True, eq=False)
class DiscreteProblem:
    spec: ProblemSpec
    grid: RadialGrid

    def __post_init__(self):
        if self.grid.dim != self.spec.dim:
            raise ValueError("grid and problem dimensions differ")

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def w(self) -> np.ndarray:
        return self.grid.weights

    @property
    def gamma(self) -> float:
        return self.spec.gamma

    @property
    def lap(self) -> DiscreteLaplacian:
        return self.grid.laplacian

    @cached_property
    def f(self) -> np.ndarray:
        return self.spec.f.on(self.grid)

    @cached_property
    def P(self) -> np.ndarray:
        return self.spec.P.on(self.grid)

    @cached_property
    def P_mass(self) -> float:
        return self.grid.integrate(self.P)

    @cached_property
    def nonlocal_op(self):
        from .nonlocal_term import NonlocalOperator

        return NonlocalOperator(self.spec, self.grid)


def discretize(spec: ProblemSpec, R_max: float | None = None, M: int | None = None,
               stretch: float | None = None) -> DiscreteProblem:
    """Bind ``spec`` to a grid; unspecified parameters come from ``DEFAULT_GRID``."""
    grid = build_grid(
        spec.dim,
        DEFAULT_GRID["R_max"] if R_max is None else R_max,
        DEFAULT_GRID["M"] if M is None else M,
        DEFAULT_GRID["stretch"] if stretch is None else stretch,
    )
    return DiscreteProblem(spec, grid)
