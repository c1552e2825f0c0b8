"""Solution operator S and the principal eigenpair of ``-Delta u = lambda f u``.

In matrix form the eigenproblem is the symmetric-definite pencil
``K u = lambda D u`` with ``K`` the stiffness matrix and ``D = diag(w f)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import DiscreteProblem


class IterationLimitError(RuntimeError):
    def __init__(self, msg: str, residual: float):
        super().__init__(f"{msg} (last residual {residual:.3e})")
        self.residual = residual


@dataclass
class EigenPair:
    lambda1: float
    phi1: np.ndarray
    residual: float
    decay_floor: float
    lambda2: float | None = None
    residual2: float | None = None
    iterations: int = 0


def apply_S(v: np.ndarray, problem: DiscreteProblem) -> np.ndarray:
    """Decaying solution of ``-Delta u = f v``."""
    return problem.lap.solve(problem.f * np.asarray(v, dtype=float))


def rayleigh(u: np.ndarray, problem: DiscreteProblem) -> float:
    """``int |grad u|^2 / int f u^2``."""
    u = np.asarray(u, dtype=float)
    den = problem.grid.integrate(problem.f * u * u)
    if den == 0:
        raise ZeroDivisionError("Rayleigh quotient of the zero field")
    return problem.lap.energy(u) / den


def check_decay_floor(u: np.ndarray, grid, window_start: float | None = None) -> float:
    """``min r^{N-2} u(r)`` over the trailing window (default: last decade)."""
    sl = grid.tail_slice(window_start)
    return float(np.min(grid.nodes[sl] ** (grid.dim - 2) * np.asarray(u)[sl]))


def plateau_variation(u: np.ndarray, grid, window_start: float | None = None) -> float:
    """Relative spread ``(max - min) / mean`` of ``r^{N-2} u`` over the trailing window."""
    sl = grid.tail_slice(window_start)
    y = grid.nodes[sl] ** (grid.dim - 2) * np.asarray(u)[sl]
    return float((y.max() - y.min()) / abs(y.mean()))


def _residual(lu, d, x, lam):
    """``|x - lam S x|_inf / |x|_inf``, the eigen-residual in fixed-point form."""
    return float(np.abs(x - lam * lu.solve(d * x)).max() / np.abs(x).max())


def _inverse_iteration(problem, x, tol, max_iter, deflate=None):
    lap = problem.lap
    K = lap.stiffness
    d = problem.w * problem.f
    lam, res = np.nan, np.inf
    for it in range(1, max_iter + 1):
        if deflate is not None:
            x = x - (deflate @ (d * x)) / (deflate @ (d * deflate)) * deflate
        x = lap._lu.solve(d * x)
        x /= np.abs(x).max()
        if deflate is not None:
            x = x - (deflate @ (d * x)) / (deflate @ (d * deflate)) * deflate
        lam = float(x @ (K @ x)) / float(x @ (d * x))
        res = _residual(lap._lu, d, x, lam)
        if res < tol:
            return lam, x, res, it
    raise IterationLimitError(f"inverse iteration did not converge in {max_iter} steps", res)


def principal_eigenpair(problem: DiscreteProblem, tol: float = 1e-11, max_iter: int = 2000,
                        second: bool = True) -> EigenPair:
    """Inverse power iteration from ``exp(-r)``; ``phi1`` is positive with ``max = 1``.

    ``tol`` bounds ``|phi - lambda S phi|_inf`` for the sup-normalized iterate.  The second
    eigenvalue comes from a second iteration deflated in the ``f``-weighted
    inner product and is a diagnostic only.
    """
    r = problem.r
    lam, x, res, its = _inverse_iteration(problem, np.exp(-r), tol, max_iter)
    if x[0] < 0:
        x = -x
    x /= x.max()
    pair = EigenPair(lam, x, res, check_decay_floor(x, problem.grid), iterations=its)
    if second:
        start = np.exp(-r) * (1.0 - r)
        try:
            lam2, _, res2, _ = _inverse_iteration(problem, start, max(tol, 1e-9), max_iter, deflate=x)
            pair.lambda2, pair.residual2 = lam2, res2
        except IterationLimitError as exc:
            pair.lambda2, pair.residual2 = np.nan, exc.residual
    return pair
