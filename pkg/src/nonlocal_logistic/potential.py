"""Newtonian potential of radial sources and its decay / gradient bounds.

For ``-Delta u = F`` with ``F`` radial and ``u -> 0`` at infinity,

    u(r) = [ r^{2-N} int_0^r s^{N-1} F ds + int_r^inf s F ds ] / (N - 2).

We use the positive Newtonian kernel, i.e. ``u = int Gamma(x - y) F(y) dy`` with
``Gamma > 0``.  Sources are assumed negligible beyond ``R_max``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .grid import RadialGrid

TAIL_WARN = 1e-6


class TailTruncationWarning(UserWarning):
    pass


@dataclass
class PotentialResult:
    u: np.ndarray
    decay_constant: float
    c0: float | None = None
    P_mass: float | None = None

    def decay_bound(self, grid: RadialGrid) -> np.ndarray:
        """``c0 |P|_1 / (omega_N (N-2)) r^{2-N}`` (infinite at ``r = 0``)."""
        N = grid.dim
        with np.errstate(divide="ignore"):
            return self.c0 * self.P_mass / (grid.omega * (N - 2)) * grid.nodes ** (2.0 - N)


def _cumulative(grid: RadialGrid, F: np.ndarray):
    r = grid.nodes
    N = grid.dim
    inner = cumulative_trapezoid(r ** (N - 1) * F, r, initial=0.0)
    sF = cumulative_trapezoid(r * F, r, initial=0.0)
    outer = sF[-1] - sF
    return inner, outer


def plateau_median(grid: RadialGrid, u: np.ndarray, r_start: float | None = None) -> float:
    sl = grid.tail_slice(r_start)
    return float(np.median(grid.nodes[sl] ** (grid.dim - 2) * u[sl]))


def radial_potential(F: np.ndarray, grid: RadialGrid, P: np.ndarray | None = None,
                     plateau_start: float | None = None) -> PotentialResult:
    """Potential of a radial source by cumulative trapezoidal quadrature.

    If ``P`` is given, ``c0 = max |F| / P`` is certified and the mass ``|P|_1``
    is computed with the same rule, so the decay bound can be checked
    node by node.
    """
    F = np.asarray(F, dtype=float)
    r = grid.nodes
    N = grid.dim
    inner, outer = _cumulative(grid, F)
    u = np.empty_like(r)
    u[0] = outer[0] / (N - 2)
    u[1:] = (r[1:] ** (2.0 - N) * inner[1:] + outer[1:]) / (N - 2)

    abs_inner = _cumulative(grid, np.abs(F))[0]
    total = abs_inner[-1]
    if total > 0:
        edge = total - abs_inner[grid.tail_slice(0.9 * grid.R_max).start]
        if edge > TAIL_WARN * total:
            warnings.warn(f"source mass near R_max is {edge / total:.2e} of the total",
                          TailTruncationWarning, stacklevel=2)

    c0 = mass = None
    if P is not None:
        P = np.asarray(P, dtype=float)
        c0 = float(np.max(np.abs(F) / P))
        mass = float(grid.omega * _cumulative(grid, P)[0][-1])
    return PotentialResult(u, plateau_median(grid, u, plateau_start), c0, mass)


def check_decay_bound(result: PotentialResult, grid: RadialGrid, rtol: float = 1e-12) -> tuple[float, bool]:
    """Largest ``|u| / bound`` over nodes ``r >= r_1`` and whether it is ``<= 1``."""
    bound = result.decay_bound(grid)[1:]
    ratio = float(np.max(np.abs(result.u[1:]) / bound))
    return ratio, ratio <= 1.0 + rtol


def check_monotone_positive(result: PotentialResult, F: np.ndarray) -> bool | None:
    """True iff ``u > 0`` and strictly decreasing for ``r > 0``; None when ``F`` changes sign.

    The first step is only required to be non-increasing: ``u'(0) = 0`` and the
    quadrature gives ``u(r_0) = u(r_1)`` exactly.
    """
    F = np.asarray(F)
    if np.any(F < 0):
        return None
    u = result.u
    return bool(np.all(u > 0) and u[1] <= u[0] and np.all(np.diff(u[1:]) < 0))


class GradientBound(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def check_gradient_bound(u: np.ndarray, F: np.ndarray, R: float, grid: RadialGrid) -> GradientBound:
    """``max_{r<=R} |u'| <= N/R max_{r<=2R}|u| + 12R/(N-2) max_{r<=2R}|F|``."""
    if 2.0 * R > grid.R_max:
        raise ValueError(f"2R = {2 * R} exceeds R_max = {grid.R_max}")
    r = grid.nodes
    N = grid.dim
    du = np.gradient(u, r)
    lhs = float(np.max(np.abs(du[r <= R])))
    big = r <= 2.0 * R
    rhs = float(N / R * np.max(np.abs(u[big])) + 12.0 * R / (N - 2) * np.max(np.abs(F[big])))
    return GradientBound(lhs, rhs, lhs <= rhs)
