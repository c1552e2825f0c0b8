"""Newton solves of ``-Delta u + phi_u u = lambda f u`` and the positive branch from (lambda_1, 0).

The fixed-point form is ``u = lambda S(u) + G(u)`` with ``G(v)`` the decaying
solution of ``-Delta G = -phi_v v``.  Testing the equation with ``phi_1`` gives

    lambda - lambda_1 = <phi_u u, phi_1> / <f u, phi_1>,

which every computed branch point is checked against.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import splu

from .grid import lebesgue_norm
from .problem import DiscreteProblem
from .spectral import EigenPair, principal_eigenpair

log = logging.getLogger(__name__)


class SeedFailure(RuntimeError):
    def __init__(self, msg: str, history: list[float]):
        super().__init__(msg)
        self.history = history


def residual(lam: float, u: np.ndarray, problem: DiscreteProblem) -> np.ndarray:
    """``A u + phi_u u - lambda f u`` at the nodes."""
    u = np.asarray(u, dtype=float)
    return problem.lap.apply(u) + problem.nonlocal_op(u) * u - lam * problem.f * u


def _residual_scale(lam, u, problem):
    au = np.abs(problem.lap.apply(u)).max()
    return max(au, abs(lam) * np.abs(problem.f * u).max(), np.finfo(float).tiny)


def apply_G(v: np.ndarray, problem: DiscreteProblem) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return problem.lap.solve(-problem.nonlocal_op(v) * v)


def G_constant(v: np.ndarray, problem: DiscreteProblem) -> float:
    """Measured ``C`` in ``|G(v)|_inf <= C |v|_inf^{gamma+1}``."""
    sup = np.abs(v).max()
    if sup == 0:
        return 0.0
    return float(np.abs(apply_G(v, problem)).max() / sup ** (problem.gamma + 1.0))


class _Linearization:
    """Jacobian of the residual at ``(lam, u)`` with optional one-row/one-column border.

    Separable kernels make the nonlocal part rank one; the system is then
    solved as a sparse bordered matrix.  Other kernels use a dense LU.
    """

    def __init__(self, problem: DiscreteProblem, lam: float, u: np.ndarray):
        op = problem.nonlocal_op
        self.n = u.size
        lap = problem.lap
        diag = op(u) - lam * problem.f
        self.T = (sps.diags(1.0 / problem.w) @ lap.stiffness + sps.diags(diag)).tocsc()
        s = op.source_weights(u)
        if op.factors is not None:
            left, right = op.factors
            self.a = u * left
            self.b = right * s
            self.dense = None
        else:
            self.dense = self.T.toarray() + (u[:, None] * op.kw) * s[None, :]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        if self.dense is not None:
            return self.dense @ x
        return self.T @ x + self.a * (self.b @ x)

    def solve(self, rhs, col=None, row=None, corner=0.0, rhs_extra=0.0):
        """Solve ``[J col; row^T corner] [x; mu] = [rhs; rhs_extra]``."""
        n = self.n
        bordered = col is not None
        if self.dense is not None:
            if not bordered:
                return np.linalg.solve(self.dense, rhs), None
            big = np.empty((n + 1, n + 1))
            big[:n, :n] = self.dense
            big[:n, n] = col
            big[n, :n] = row
            big[n, n] = corner
            sol = np.linalg.solve(big, np.append(rhs, rhs_extra))
            return sol[:n], sol[n]
        blocks = [[self.T, sps.csc_matrix(self.a[:, None])],
                  [sps.csr_matrix(self.b[None, :]), sps.csr_matrix([[-1.0]])]]
        b = [rhs, [0.0]]
        if bordered:
            blocks[0].append(sps.csc_matrix(np.asarray(col)[:, None]))
            blocks[1].append(None)
            blocks.append([sps.csr_matrix(np.asarray(row)[None, :]), None, sps.csr_matrix([[corner]])])
            b.append([rhs_extra])
        big = sps.bmat(blocks, format="csc")
        sol = splu(big).solve(np.concatenate([np.asarray(v, float) for v in b]))
        return sol[:n], (sol[n + 1] if bordered else None)


def jacobian_vector(lam: float, u: np.ndarray, v: np.ndarray, problem: DiscreteProblem) -> np.ndarray:
    return _Linearization(problem, lam, np.asarray(u, float)).matvec(np.asarray(v, float))


# ---------------------------------------------------------------------------
# branch points and the lambda identity
# ---------------------------------------------------------------------------


@dataclass
class BranchPoint:
    lam: float
    u: np.ndarray = field(repr=False)
    sup_norm: float
    d12_norm: float
    identity_residual: float
    positive: bool

    def row(self) -> list[float]:
        return [self.lam, self.sup_norm, self.d12_norm, self.identity_residual, float(self.positive)]


def identity_ratio(u: np.ndarray, problem: DiscreteProblem, eig: EigenPair) -> float:
    """``<phi_u u, phi_1>_w / <f u, phi_1>_w``."""
    w = problem.w
    num = np.sum(w * problem.nonlocal_op(u) * u * eig.phi1)
    den = np.sum(w * problem.f * u * eig.phi1)
    return float(num / den)


def identity_residual(lam: float, u: np.ndarray, problem: DiscreteProblem, eig: EigenPair) -> float:
    """Relative defect of ``lambda - lambda_1 = <phi_u u, phi_1> / <f u, phi_1>``."""
    gap = lam - eig.lambda1
    err = gap - identity_ratio(u, problem, eig)
    return float(abs(err) / max(abs(gap), 1e-12 * abs(lam)))


def make_point(lam: float, u: np.ndarray, problem: DiscreteProblem, eig: EigenPair) -> BranchPoint:
    return BranchPoint(
        lam=float(lam),
        u=u,
        sup_norm=float(np.abs(u).max()),
        d12_norm=float(np.sqrt(problem.lap.energy(u))),
        identity_residual=identity_residual(lam, u, problem, eig),
        positive=bool(np.all(u > 0)),
    )


# ---------------------------------------------------------------------------
# Newton at fixed lambda
# ---------------------------------------------------------------------------


@dataclass
class NewtonResult:
    status: str  # converged | trivial | sign_failure | iteration_limit | singular
    lam: float
    u: np.ndarray = field(repr=False)
    iterations: int
    history: list[float] = field(default_factory=list, repr=False)
    point: BranchPoint | None = None

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def newton_solve(
    lam: float,
    u0: np.ndarray,
    problem: DiscreteProblem,
    eig: EigenPair | None = None,
    tol: float = 1e-11,
    max_iter: int = 200,
    trivial_tol: float = 1e-10,
) -> NewtonResult:
    """Projected Newton iteration on the positive cone.

    Iterates are clipped at zero; a step is halved while it increases the
    residual.  Reaching ``max|u| < trivial_tol`` returns the trivial solution.
    """
    u = np.maximum(np.asarray(u0, dtype=float), 0.0)
    hist: list[float] = []
    status = "iteration_limit"
    it = 0
    for it in range(max_iter + 1):
        if np.abs(u).max() < trivial_tol:
            status = "trivial"
            break
        R = residual(lam, u, problem)
        rn = float(np.abs(R).max() / _residual_scale(lam, u, problem))
        hist.append(rn)
        if rn < tol:
            status = "converged" if np.all(u > 0) else "sign_failure"
            break
        if it == max_iter:
            break
        try:
            step, _ = _Linearization(problem, lam, u).solve(-R)
        except (RuntimeError, np.linalg.LinAlgError):
            status = "singular"
            break
        if not np.all(np.isfinite(step)):
            status = "singular"
            break
        rabs = np.abs(R).max()
        alpha = 1.0
        for _ in range(30):
            trial = np.maximum(u + alpha * step, 0.0)
            if np.abs(trial).max() < trivial_tol or np.abs(residual(lam, trial, problem)).max() < rabs:
                break
            alpha *= 0.5
        u = trial
    res = NewtonResult(status, float(lam), u, it, hist)
    if status == "converged" and eig is not None:
        res.point = make_point(lam, u, problem, eig)
    return res


def linearized_amplitude(dlam: float, problem: DiscreteProblem, eig: EigenPair) -> float:
    """``t`` with ``t^gamma <phi_{phi_1} phi_1, phi_1> / <f phi_1, phi_1> = dlam``."""
    c1 = identity_ratio(eig.phi1, problem, eig)
    return float((max(dlam, 0.0) / c1) ** (1.0 / problem.gamma))


def seed_solution(lam: float, problem: DiscreteProblem, eig: EigenPair, **kw) -> NewtonResult:
    """Newton at ``lam > lambda_1`` started from ``t phi_1`` with ``t`` from the identity."""
    t = linearized_amplitude(lam - eig.lambda1, problem, eig)
    return newton_solve(lam, t * eig.phi1, problem, eig, **kw)


# ---------------------------------------------------------------------------
# pseudo-arclength continuation
# ---------------------------------------------------------------------------


@dataclass
class Branch:
    points: list[BranchPoint]
    start_lambda: float
    termination: str  # maxAmplitude | maxLambda | stepFailure | maxSteps
    eig: EigenPair | None = field(default=None, repr=False)

    def lambdas(self) -> np.ndarray:
        return np.array([p.lam for p in self.points])

    def amplitudes(self) -> np.ndarray:
        return np.array([p.sup_norm for p in self.points])


def branch_continue(
    problem: DiscreteProblem,
    lambda_max: float,
    amp_max: float = np.inf,
    ds: float = 0.05,
    eig: EigenPair | None = None,
    seed_offset: float = 1e-3,
    ds_max: float | None = None,
    ds_min: float = 1e-6,
    tol: float = 1e-11,
    max_steps: int = 2000,
    max_corrector: int = 12,
) -> Branch:
    """Trace positive solutions from ``(lambda_1, 0)`` by pseudo-arclength continuation.

    The seed is solved at ``lambda_1 (1 + seed_offset)``.  Arclength is
    measured as ``sqrt(|du|_{2,P}^2 / |phi_1|_{2,P}^2 + dlambda^2)``.  The last
    point is pinned to ``lambda_max`` when the branch crosses it.
    """
    if ds <= 0:
        raise ValueError("ds must be positive")
    if eig is None:
        eig = principal_eigenpair(problem)
    ds_max = 20.0 * ds if ds_max is None else ds_max
    lam1 = eig.lambda1
    w = problem.w
    f = problem.f
    sw = w * problem.P / np.sum(w * problem.P * eig.phi1**2)

    def snorm(du, dl):
        return float(np.sqrt(np.sum(sw * du * du) + dl * dl))

    seed = seed_solution(lam1 * (1.0 + seed_offset), problem, eig, tol=tol)
    if not seed.converged:
        raise SeedFailure(f"could not leave the trivial branch (status {seed.status})", seed.history)
    points = [seed.point]
    u, lam = seed.u, seed.lam

    # tangent: J du = f u dlam, oriented towards growing lambda
    lin = _Linearization(problem, lam, u)
    z, _ = lin.solve(f * u)
    nz = snorm(z, 1.0)
    tu, tl = z / nz, 1.0 / nz

    termination = "maxSteps"
    h = ds
    for _ in range(max_steps):
        if lam >= lambda_max:
            termination = "maxLambda"
            break
        if points[-1].sup_norm >= amp_max:
            termination = "maxAmplitude"
            break
        if h < ds_min:
            termination = "stepFailure"
            break
        up, lp = u + h * tu, lam + h * tl
        pin = lp > lambda_max
        v, lv, iters, ok = up.copy(), (lambda_max if pin else lp), 0, False
        for iters in range(1, max_corrector + 1):
            R = residual(lv, v, problem)
            lin = _Linearization(problem, lv, v)
            try:
                if pin:
                    dv, _ = lin.solve(-R)
                    dl = 0.0
                else:
                    g = np.sum(sw * tu * (v - up)) + tl * (lv - lp)
                    dv, dl = lin.solve(-R, col=-f * v, row=sw * tu, corner=tl, rhs_extra=-g)
            except (RuntimeError, np.linalg.LinAlgError):
                break
            v = v + dv
            lv = lv + dl
            rn = np.abs(residual(lv, v, problem)).max() / _residual_scale(lv, v, problem)
            if not np.isfinite(rn):
                break
            if rn < tol:
                ok = True
                break
        if not ok or not np.all(v > 0) or lv <= lam1:
            h *= 0.5
            log.debug("step rejected at lambda=%.6g, ds -> %.3g", lam, h)
            continue
        # new tangent from the bordered system, keeps orientation
        lin = _Linearization(problem, lv, v)
        z, zl = lin.solve(np.zeros_like(v), col=-f * v, row=sw * tu, corner=tl, rhs_extra=1.0)
        nz = snorm(z, zl)
        tu, tl = z / nz, zl / nz
        u, lam = v, lv
        points.append(make_point(lam, u, problem, eig))
        if iters <= 3:
            h = min(1.5 * h, ds_max)
    return Branch(points, lam1, termination, eig)


class AprioriBounds(NamedTuple):
    rD12: float
    rSup: float


def apriori_check(branch: Branch, Lambda_cap: float, problem: DiscreteProblem) -> AprioriBounds:
    """Max ``||u||_{1,2}`` and max ``|u|_inf / |u|_{2*}`` over points with ``lambda <= Lambda_cap``."""
    N = problem.grid.dim
    p_star = 2.0 * N / (N - 2)
    rd = rs = 0.0
    for pt in branch.points:
        if pt.lam > Lambda_cap:
            continue
        rd = max(rd, pt.d12_norm)
        l2s = lebesgue_norm(pt.u, p_star, problem.grid)
        if l2s > 0:
            rs = max(rs, pt.sup_norm / l2s)
    return AprioriBounds(float(rd), float(rs))
