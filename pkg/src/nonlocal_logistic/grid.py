"""Radial grids on [0, R_max], quadrature weights and the discrete radial Laplacian.

The Laplacian is a vertex-centred finite-volume discretization of
``-(r^{N-1} u')' / r^{N-1}``.  Each node ``r_i`` owns the dual shell between the
neighbouring midpoints, so the quadrature weight ``w_i`` is the exact volume of
that shell in R^N.  With ``K`` the (symmetric, tridiagonal) stiffness matrix,
the operator is ``A = W^{-1} K``, which makes ``A`` self-adjoint in the
``w``-weighted inner product by construction.

Outer boundary: ``u'(R) + (N-2)/R u(R) = 0``.  This is the flux of the harmonic
exterior extension ``c r^{2-N}``, so ``u^T K u`` equals the Dirichlet energy of
that extension over all of R^N.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from math import gamma as gamma_fn
from math import pi
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import splu


def sphere_area(N: int) -> float:
    """Surface area of the unit sphere S^{N-1} (4*pi for N = 3)."""
    return 2.0 * pi ** (N / 2.0) / gamma_fn(N / 2.0)


class GridError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Nodes ``0 = r_0 < ... < r_M = R_max`` in dimension ``dim``.

    ``weights[i]`` is the full-space volume of the shell owned by node ``i``,
    so ``weights @ F(nodes)`` approximates ``\\int_{R^N} F(|x|) dx``.
    """

    dim: int
    nodes: np.ndarray
    stretch: float = 1.0
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        r = np.asarray(self.nodes, dtype=float)
        if r.ndim != 1 or r.size < 17:
            raise GridError("a radial grid needs at least 16 intervals")
        if r[0] != 0.0 or np.any(np.diff(r) <= 0.0):
            raise GridError("nodes must start at 0 and increase strictly")
        if self.dim < 3:
            raise GridError("dimension must be at least 3")
        r.setflags(write=False)
        object.__setattr__(self, "nodes", r)
        edges = self.dual_edges
        N = self.dim
        w = sphere_area(N) * (edges[1:] ** N - edges[:-1] ** N) / N
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def M(self) -> int:
        """Number of intervals (nodes minus one)."""
        return self.nodes.size - 1

    @property
    def R_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def omega(self) -> float:
        return sphere_area(self.dim)

    @property
    def dual_edges(self) -> np.ndarray:
        r = self.nodes
        return np.concatenate(([0.0], 0.5 * (r[1:] + r[:-1]), [r[-1]]))

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def sample(self, func: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        return np.asarray(func(self.nodes), dtype=float) * np.ones_like(self.nodes)

    def tail_slice(self, r_start: float | None = None) -> slice:
        """Index slice of nodes with ``r >= r_start`` (default: last decade)."""
        if r_start is None:
            r_start = self.R_max / 10.0
        i0 = int(np.searchsorted(self.nodes, r_start, side="left"))
        return slice(i0, None)

    @cached_property
    def laplacian(self) -> "DiscreteLaplacian":
        return DiscreteLaplacian(self)


def build_grid(N: int, R_max: float, M: int, stretch: float = 1.0) -> RadialGrid:
    """Build a radial grid with ``M`` intervals on ``[0, R_max]``.

    Cell widths grow geometrically; ``stretch`` is the ratio of the outermost
    to the innermost cell width (``stretch = 1`` gives a uniform grid).
    """
    if not R_max > 0:
        raise GridError(f"R_max must be positive, got {R_max}")
    if M < 16:
        raise GridError(f"M must be at least 16, got {M}")
    if stretch < 1:
        raise GridError(f"stretch must be >= 1, got {stretch}")
    if stretch == 1.0:
        h = np.full(M, R_max / M)
    else:
        q = stretch ** (1.0 / (M - 1))
        h = q ** np.arange(M)
        h *= R_max / h.sum()
    nodes = np.concatenate(([0.0], np.cumsum(h)))
    nodes[-1] = R_max
    return RadialGrid(dim=N, nodes=nodes, stretch=float(stretch))


class DiscreteLaplacian:
    """``A = W^{-1} K`` approximating ``u -> -Delta u`` for radial ``u``.

    Symmetry at the origin comes for free: the face at ``r = 0`` has zero area.
    """

    def __init__(self, grid: RadialGrid):
        self.grid = grid
        r = grid.nodes
        N = grid.dim
        om = grid.omega
        mid = 0.5 * (r[1:] + r[:-1])
        flux = om * mid ** (N - 1) / np.diff(r)
        diag = np.zeros_like(r)
        diag[:-1] += flux
        diag[1:] += flux
        diag[-1] += om * (N - 2) * r[-1] ** (N - 2)
        self.flux = flux
        self.diag = diag
        self.stiffness = sps.diags([-flux, diag, -flux], [-1, 0, 1], format="csc")

    @cached_property
    def _lu(self):
        return splu(self.stiffness)

    def apply(self, u: np.ndarray) -> np.ndarray:
        return (self.stiffness @ u) / self.grid.weights

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Unique discrete solution of ``A u = rhs``."""
        return self._lu.solve(self.grid.weights * np.asarray(rhs, dtype=float))

    def energy(self, u: np.ndarray, v: np.ndarray | None = None) -> float:
        """Discrete ``\\int grad u . grad v`` (exterior extension included)."""
        if v is None:
            v = u
        return float(u @ (self.stiffness @ v))

    def banded(self) -> np.ndarray:
        """Stiffness in ``scipy.linalg.solve_banded`` (1, 1) layout."""
        n = self.diag.size
        ab = np.zeros((3, n))
        ab[0, 1:] = -self.flux
        ab[1] = self.diag
        ab[2, :-1] = -self.flux
        return ab


def apply_laplacian(u: np.ndarray, grid: RadialGrid) -> np.ndarray:
    return grid.laplacian.apply(u)


def solve_laplacian(rhs: np.ndarray, grid: RadialGrid) -> np.ndarray:
    return grid.laplacian.solve(rhs)


class Norms(NamedTuple):
    sup: float
    L2P: float
    D12seminorm: float
    decayNorm: float


def norms(u: np.ndarray, P, grid: RadialGrid) -> Norms:
    """Sup, weighted L^2_P, Dirichlet (D^{1,2}) and ``sup r^{N-2}|u|`` norms.

    ``P`` may be a callable of ``r`` or an array of node values.
    """
    u = np.asarray(u, dtype=float)
    Pv = grid.sample(P) if callable(P) else np.asarray(P, dtype=float)
    au = np.abs(u)
    return Norms(
        sup=float(au.max()),
        L2P=float(np.sqrt(grid.integrate(Pv * u * u))),
        D12seminorm=float(np.sqrt(max(grid.laplacian.energy(u), 0.0))),
        decayNorm=float(np.max(grid.nodes ** (grid.dim - 2) * au)),
    )


def lebesgue_norm(u: np.ndarray, p: float, grid: RadialGrid) -> float:
    return float(grid.integrate(np.abs(u) ** p) ** (1.0 / p))


def write_field_csv(path, r: np.ndarray, values: np.ndarray, column: str = "value") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", column])
        for ri, vi in zip(r, values):
            w.writerow([f"{ri:.17g}", f"{vi:.17g}"])


def read_field_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]
