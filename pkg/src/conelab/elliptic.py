"""Dirichlet problems for the conical Laplacian on metric balls."""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import BallDomain, cone_distance_arrays
from .operators import (ConeOperator, GridError, GridSpec, ScalarField, assemble_laplacian,
                        first_derivatives, weighted_second_derivatives)


@dataclass
class SolveStats:
    iterations: int = 0
    residual: float = 0.0
    wall_time: float = 0.0
    method: str = "cg"
    unknowns: int = 0
    converged: bool = True
    max_principle_violation: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


class SolverError(RuntimeError):
    def __init__(self, msg: str, stats: SolveStats | None = None):
        super().__init__(msg)
        self.stats = stats


Data = Callable | ScalarField | np.ndarray | float


def _node_values(data: Data, grid: GridSpec) -> np.ndarray:
    """Evaluate data at every node of ``grid``."""
    if isinstance(data, ScalarField):
        if data.grid == grid:
            return data.values.copy()
        S, R, TH = grid.coords()
        return data.interpolator()(S, R, TH)
    if callable(data):
        S, R, TH = grid.coords()
        return np.array(np.broadcast_to(np.asarray(data(S, R, TH), dtype=float), grid.shape))
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.shape, float(arr))
    if arr.size != grid.size:
        raise GridError("data array does not match the grid")
    return arr.reshape(grid.shape).copy()


def _constant_value(data: Data) -> float | None:
    if isinstance(data, (int, float, np.floating, np.integer)):
        return float(data)
    if isinstance(data, np.ndarray) and data.size and np.all(data == data.flat[0]):
        return float(data.flat[0])
    if isinstance(data, ScalarField) and np.all(data.values == data.values.flat[0]):
        return float(data.values.flat[0])
    return None


@dataclass
class DirichletProblem:
    """``L u = rhs`` in ``domain`` (or the whole grid box), ``u = boundary`` outside.

    ``rhs`` and ``boundary`` may be constants, callables ``f(S, R, TH)``,
    node arrays or fields (interpolated when they live on another grid).
    """

    grid: GridSpec
    domain: BallDomain | None = None
    rhs: Data = 0.0
    boundary: Data = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        if self.epsilon < 0:
            raise GridError("epsilon must be >= 0")
        if self.domain is not None:
            self._check_extents()

    def _check_extents(self):
        d, g = self.domain, self.grid
        if d.m != g.m:
            raise GridError("domain and grid have different tangential dimension")
        tol = 1e-12 * max(1.0, d.radius)
        for k, c in enumerate(d.center_s):
            lo, hi = g.s_bounds[k]
            if c - d.radius < lo - tol or c + d.radius > hi + tol:
                raise GridError("ball leaves the grid in a tangential direction")
        if d.center_r + d.radius > g.r_max + tol:
            raise GridError("ball leaves the grid radially")
        if not g.axis_grid and d.center_r - d.radius < g.r_lo - tol:
            raise GridError("ball meets the inner radius of an annular grid")

    def interior_mask(self) -> np.ndarray:
        inside = ~self.grid.edge_mask()
        if self.domain is not None:
            inside &= self.grid.ball_mask(self.domain)
        return inside

    def rhs_values(self) -> np.ndarray:
        return _node_values(self.rhs, self.grid)

    def boundary_values(self) -> np.ndarray:
        return _node_values(self.boundary, self.grid)


@dataclass
class _System:
    op: ConeOperator
    interior: np.ndarray
    boundary: np.ndarray
    A_ii: sp.csr_matrix
    A_ib: sp.csr_matrix
    w: np.ndarray


_CACHE: dict = {}


def _system(prob: DirichletProblem) -> _System:
    key = (prob.grid, prob.domain, prob.epsilon)
    if key in _CACHE:
        return _CACHE[key]
    op = assemble_laplacian(prob.grid, prob.epsilon)
    I = prob.interior_mask().ravel()
    if not I.any():
        raise GridError("domain contains no interior nodes")
    A_I = op.matrix[I]
    touched = np.zeros(prob.grid.size, dtype=bool)
    touched[A_I.indices] = True
    B = touched & ~I
    if not B.any():
        raise GridError("boundary node set is empty")
    sysm = _System(op, I, B, A_I[:, I].tocsr(), A_I[:, B].tocsr(), op.weight[I])
    if len(_CACHE) > 16:
        _CACHE.clear()
    _CACHE[key] = sysm
    return sysm


def solve_dirichlet(prob: DirichletProblem, tol: float = 1e-10, method: str = "cg",
                    x0: ScalarField | None = None, maxiter: int | None = None):
    """Solve ``prob``; returns ``(u, stats)``.

    The interior system is symmetrized with the volume weight and solved by
    Jacobi-preconditioned CG (``method="direct"`` uses a sparse LU instead).
    ``u`` carries boundary node values and NaN elsewhere; ``u.mask`` marks
    the interior nodes.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    t0 = time.perf_counter()
    S = _system(prob)
    f = prob.rhs_values().ravel()
    phi = prob.boundary_values().ravel()
    if not np.all(np.isfinite(phi[S.boundary])):
        raise GridError("boundary data not finite on the boundary nodes")
    b = S.w * (S.A_ib @ phi[S.boundary] - f[S.interior])
    A = -(sp.diags(S.w) @ S.A_ii).tocsr()
    n = A.shape[0]
    stats = SolveStats(method=method, unknowns=n)
    bnorm = np.linalg.norm(b)
    if method == "direct":
        x = spla.spsolve(A.tocsc(), b)
    elif method == "cg":
        cap = maxiter or int(50 * math.sqrt(n)) + 10
        guess = None if x0 is None else x0.values.ravel()[S.interior]
        if guess is not None:
            guess = np.where(np.isfinite(guess), guess, 0.0)
        count = [0]

        def cb(_):
            count[0] += 1

        if bnorm == 0.0:
            x = np.zeros(n)
        else:
            M = sp.diags(1.0 / A.diagonal())
            x, info = spla.cg(A, b, x0=guess, rtol=tol, atol=0.0, maxiter=cap, M=M, callback=cb)
        stats.iterations = count[0]
    else:
        raise ValueError(f"unknown method {method!r}")
    res = float(np.linalg.norm(A @ x - b) / bnorm) if bnorm > 0 else 0.0
    stats.residual = res
    stats.wall_time = time.perf_counter() - t0
    limit = max(10 * tol, 1e-9) if method == "direct" else tol
    if res > limit:
        stats.converged = False
        raise SolverError(f"solver did not reach tol {tol:g} (residual {res:.3e})", stats)
    vals = np.full(prob.grid.size, np.nan)
    vals[S.boundary] = phi[S.boundary]
    vals[S.interior] = x
    if np.all(f[S.interior] == 0):
        pb = phi[S.boundary]
        lo, hi = pb.min(), pb.max()
        stats.max_principle_violation = float(max(x.max() - hi, lo - x.min(), 0.0))
    return ScalarField(prob.grid, vals, S.interior), stats


def reduce_constant_rhs(prob: DirichletProblem):
    """Remove a constant right-hand side ``c`` with an explicit quadratic.

    Returns ``(reduced, q)`` where ``reduced`` has rhs 0 and boundary data
    ``phi - q`` and ``q(S, R, TH)`` satisfies ``L q = c``.  With tangential
    coordinates ``q = c/(2m) sum s_j^2``; otherwise ``q = c r^2 / 4``.
    """
    c = _constant_value(prob.rhs)
    if c is None:
        raise ValueError("reduce_constant_rhs needs a constant right-hand side")
    m = prob.grid.m

    def q(S, R, TH):
        if m:
            return c / (2 * m) * np.sum(np.asarray(S) ** 2, axis=0)
        return c * np.asarray(R) ** 2 / 4.0

    if c == 0.0:
        return prob, q
    phi = prob.boundary_values()
    S, R, TH = prob.grid.coords()
    reduced = replace(prob, rhs=0.0, boundary=phi - q(S, R, TH))
    return reduced, q


def solve_reduced(prob: DirichletProblem, tol: float = 1e-10, **kw):
    """Solve a constant-rhs problem through :func:`reduce_constant_rhs`."""
    reduced, q = reduce_constant_rhs(prob)
    u, st = solve_dirichlet(reduced, tol, **kw)
    S, R, TH = prob.grid.coords()
    return ScalarField(prob.grid, u.values + q(S, R, TH), u.mask), st


@dataclass
class ContinuationResult:
    epsilons: list
    fields: list
    stats: list
    cauchy: list = field(default_factory=list)
    """Sup-norm differences between consecutive solutions."""


def epsilon_continuation(prob: DirichletProblem, eps_ladder, tol: float = 1e-10) -> ContinuationResult:
    ladder = [float(e) for e in eps_ladder]
    if not ladder:
        raise ValueError("empty epsilon ladder")
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("epsilon ladder must be strictly decreasing")
    if ladder[-1] < 0:
        raise ValueError("epsilon must be >= 0")
    if ladder[-1] != 0.0:
        ladder.append(0.0)
    out = ContinuationResult(ladder, [], [])
    prev = None
    for i, eps in enumerate(ladder):
        try:
            u, st = solve_dirichlet(replace(prob, epsilon=eps), tol, x0=prev)
        except SolverError as exc:
            raise SolverError(f"continuation step {i} (eps={eps:g}) failed: {exc}", exc.stats) from exc
        if prev is not None:
            d = np.abs(u.values - prev.values)[u.mask]
            out.cauchy.append(float(d.max()))
        out.fields.append(u)
        out.stats.append(st)
        prev = u
    return out


@dataclass
class MonitorReport:
    radius: float
    osc: float
    sups: dict
    constants: dict


def derivative_monitors(u: ScalarField, ball: BallDomain) -> MonitorReport:
    """Empirical constants of the interior derivative bounds on ``B(c, r/2)``.

    Each sup over the half ball is divided by ``osc / r^k`` with ``k`` the
    number of derivatives taken.
    """
    g = u.grid
    osc = u.osc()
    S, R, TH = g.coords()
    c = np.asarray(ball.center_s, dtype=float).reshape((-1,) + (1,) * R.ndim)
    half = cone_distance_arrays(S, R, TH, c, ball.center_r, ball.center_theta, g.beta) < 0.5 * ball.radius
    if u.mask is not None:
        half &= u.mask
    d1 = first_derivatives(u)
    d2 = weighted_second_derivatives(u, d1)

    def sup(arrs):
        if not arrs:
            return 0.0
        return float(max(np.nanmax(np.abs(a[half])) for a in arrs))

    sups = {
        "grad": sup([d1.grad_norm()]),
        "Dt": sup(d1.ds),
        "DtDt": sup(d2.tangential()),
        "Dn": sup([d1.dr, d1.dtheta]),
        "DtDn": sup(d2.mixed),
    }
    order = {"grad": 1, "Dt": 1, "DtDt": 2, "Dn": 1, "DtDn": 2}
    rad = ball.radius
    consts = {k: (v * rad ** order[k] / osc if osc > 0 else 0.0) for k, v in sups.items()}
    return MonitorReport(rad, osc, sups, consts)


def exterior_barrier(q, ball: BallDomain, beta: float, rho: float | None = None):
    """Barrier at the boundary point ``q = (s, r, theta)`` of a ball centred on the axis.

    ``Psi(x) = rho^2 - d(x, q_hat)^2`` with ``q_hat`` the centre of an
    exterior ball of radius ``rho`` touching ``ball`` at ``q``: zero at ``q``
    and negative on the rest of the closed ball.
    """
    qs, qr, qt = q
    rho = rho or 0.5 * ball.radius
    cs = np.asarray(ball.center_s, dtype=float)
    qs = np.asarray(qs, dtype=float)
    if ball.center_r != 0.0:
        raise ValueError("exterior_barrier expects a ball centred on the singular set")
    # chart lines at fixed theta through an axis point are geodesics
    vs = qs - cs
    vr = qr
    nrm = math.sqrt(float(vs @ vs) + vr * vr) or 1.0
    hs = qs + rho * vs / nrm
    hr = qr + rho * vr / nrm

    def psi(S, R, TH):
        c = hs.reshape((-1,) + (1,) * np.ndim(R))
        d = cone_distance_arrays(np.asarray(S, dtype=float), R, TH, c, hr, qt, beta)
        return rho ** 2 - d ** 2

    return psi
