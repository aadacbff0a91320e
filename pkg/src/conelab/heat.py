"""Conical heat equation ``u_t = Delta_beta u + f = L u / 4 + f`` on cylinders."""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .cascade import CascadeReport, ScaleRecord, cascade_ball, derivative_decay_monitors, scale_index
from .elliptic import DirichletProblem, SolverError, _system
from .geometry import BallDomain, ConeParams, ConePoint, ParameterError, make_rng
from .operators import GridSpec, ScalarField, first_derivatives
from .regularity import (BandSampler, DiniTable, ModulusData, SchauderReport, derivative_fields,
                         dyadic_bands, estimate_modulus)


def _space_time(data, grid: GridSpec, t: float) -> np.ndarray:
    """Node values of time-dependent data ``g(S, R, TH, t)`` or static data."""
    if callable(data) and not isinstance(data, ScalarField):
        S, R, TH = grid.coords()
        try:
            v = data(S, R, TH, t)
        except TypeError:
            v = data(S, R, TH)
        return np.array(np.broadcast_to(np.asarray(v, dtype=float), grid.shape))
    return DirichletProblem(grid, None, 0.0, data).boundary_values()


@dataclass
class HeatProblem:
    """Heat equation on ``domain x (t0, t0 + T]``.

    ``initial``, ``lateral`` and ``source`` accept the same data kinds as a
    :class:`DirichletProblem`; callables may take a fourth argument ``t``.
    """

    grid: GridSpec
    domain: BallDomain | None
    initial: object
    lateral: object
    source: object = 0.0
    T: float = 1.0
    dt: float | None = None
    t0: float = 0.0
    epsilon: float = 0.0
    store: list | None = None
    """Times to keep; default is a dyadic schedule plus the final time."""
    method: str = "auto"
    tol: float = 1e-12
    compat_tol: float = 1e-8

    def __post_init__(self):
        if self.dt is None:
            self.dt = self.grid.h_r ** 2 / 4
        if not self.dt > 0 or not self.T > 0:
            raise ParameterError("dt and T must be positive")
        self.elliptic = DirichletProblem(self.grid, self.domain, 0.0, 0.0, self.epsilon)

    @property
    def n_steps(self) -> int:
        return max(1, int(math.ceil(self.T / self.dt - 1e-9)))

    def store_times(self) -> np.ndarray:
        if self.store is not None:
            return np.asarray(sorted(self.store), dtype=float)
        ts = self.t0 + self.T * 2.0 ** -np.arange(12, -1, -1)
        return np.concatenate([[self.t0], ts])


@dataclass
class SpaceTimeField:
    times: list
    slices: list
    problem: HeatProblem | None = None

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("slice times must be strictly increasing")

    def at(self, t: float) -> np.ndarray:
        """Node values at ``t`` by linear interpolation between slices."""
        ts = self.times
        if t <= ts[0]:
            return self.slices[0].values
        if t >= ts[-1]:
            return self.slices[-1].values
        i = int(np.searchsorted(ts, t, side="right") - 1)
        w = (t - ts[i]) / (ts[i + 1] - ts[i])
        return (1 - w) * self.slices[i].values + w * self.slices[i + 1].values

    def time_derivative(self, i: int) -> np.ndarray:
        """``u_t = L u / 4 + f`` at slice ``i`` (the backward Euler relation)."""
        p = self.problem
        sysm = _system(p.elliptic)
        u = self.slices[i]
        v = np.where(np.isfinite(u.values), u.values, 0.0).ravel()
        Lu = (sysm.op.matrix @ v).reshape(u.grid.shape) / 4
        f = _space_time(p.source, u.grid, self.times[i])
        out = np.full(u.grid.shape, np.nan)
        out[u.mask] = Lu[u.mask] + f[u.mask]
        return out


@dataclass
class HeatReport:
    steps: int
    wall_time: float
    max_principle_violation: float
    """Largest per-step excursion beyond the previous extremes (f = 0 only)."""
    osc: float
    min_value: float
    iterations: int = 0


class _Stepper:
    def __init__(self, prob: HeatProblem):
        self.prob = prob
        S = _system(prob.elliptic)
        self.S = S
        dt = prob.dt
        w = S.w
        A = sp.identity(S.A_ii.shape[0], format="csr") - (dt / 4) * S.A_ii
        self.M = (sp.diags(w) @ A).tocsr()  # symmetric positive definite
        method = prob.method
        if method == "auto":
            method = "direct" if prob.grid.m == 0 else "cg"
        self.method = method
        if method == "direct":
            self.lu = spla.factorized(self.M.tocsc())
        self.Pinv = sp.diags(1.0 / self.M.diagonal())
        self.iterations = 0

    def step(self, x, phi_next, f_next):
        S, dt = self.S, self.prob.dt
        rhs = S.w * (x + dt * f_next + (dt / 4) * (S.A_ib @ phi_next))
        if self.method == "direct":
            return self.lu(rhs)
        count = [0]
        y, info = spla.cg(self.M, rhs, x0=x, rtol=self.prob.tol, atol=0.0, M=self.Pinv,
                          maxiter=int(50 * math.sqrt(x.size)) + 10,
                          callback=lambda _: count.__setitem__(0, count[0] + 1))
        self.iterations += count[0]
        if info != 0:
            raise SolverError(f"heat step did not converge (info={info})")
        return y


def heat_step(u_now: ScalarField, problem: HeatProblem, t_next: float, stepper: _Stepper | None = None):
    """One backward Euler step ``(I - dt L/4) u_next = u_now + dt f``."""
    st = stepper or _Stepper(problem)
    S = st.S
    phi = _space_time(problem.lateral, problem.grid, t_next).ravel()
    f = _space_time(problem.source, problem.grid, t_next).ravel()
    x = st.step(u_now.values.ravel()[S.interior], phi[S.boundary], f[S.interior])
    vals = np.full(problem.grid.size, np.nan)
    vals[S.boundary] = phi[S.boundary]
    vals[S.interior] = x
    return ScalarField(problem.grid, vals, S.interior)


def solve_cylinder(prob: HeatProblem):
    """March to ``t0 + T``; returns ``(SpaceTimeField, HeatReport)``."""
    t_start = time.perf_counter()
    st = _Stepper(prob)
    S = st.S
    g = prob.grid
    u0 = _space_time(prob.initial, g, prob.t0).ravel()
    phi0 = _space_time(prob.lateral, g, prob.t0).ravel()
    gap = np.abs(u0[S.boundary] - phi0[S.boundary])
    scale = max(1.0, float(np.nanmax(np.abs(phi0[S.boundary]))))
    if np.nanmax(gap) > prob.compat_tol * scale:
        warnings.warn(f"initial and lateral data disagree by {np.nanmax(gap):.3e} at the corner")
    vals = np.full(g.size, np.nan)
    vals[S.interior] = u0[S.interior]
    vals[S.boundary] = phi0[S.boundary]
    u = ScalarField(g, vals, S.interior)
    store = list(prob.store_times())
    times, slices = [], []
    if store and store[0] <= prob.t0 + 1e-15:
        times.append(prob.t0)
        slices.append(u)
    f_zero = isinstance(prob.source, (int, float)) and prob.source == 0
    viol = 0.0
    lo_all, hi_all = np.nanmin(vals), np.nanmax(vals)
    n = prob.n_steps
    x = u.values.ravel()[S.interior]
    for i in range(1, n + 1):
        t = prob.t0 + min(i * prob.dt, prob.T)
        phi = _space_time(prob.lateral, g, t).ravel()
        f = _space_time(prob.source, g, t).ravel() if not f_zero else np.zeros(g.size)
        try:
            y = st.step(x, phi[S.boundary], f[S.interior])
        except SolverError as exc:
            raise SolverError(f"step {i} at t={t:.4g}: {exc}") from exc
        if f_zero:
            lo = min(x.min(), phi[S.boundary].min())
            hi = max(x.max(), phi[S.boundary].max())
            viol = max(viol, y.max() - hi, lo - y.min())
        x = y
        lo_all, hi_all = min(lo_all, y.min()), max(hi_all, y.max())
        while store and t >= store[0] - 1e-12 * max(1.0, abs(t)):
            store.pop(0)
            vals = np.full(g.size, np.nan)
            vals[S.boundary] = phi[S.boundary]
            vals[S.interior] = x
            if not times or t > times[-1]:
                times.append(t)
                slices.append(ScalarField(g, vals, S.interior))
    rep = HeatReport(n, time.perf_counter() - t_start, float(max(viol, 0.0)),
                     float(hi_all - lo_all), float(lo_all), st.iterations)
    return SpaceTimeField(times, slices, prob), rep


# ---------------------------------------------------------------------------
# monitors


def metric_grad_sq(u: ScalarField) -> np.ndarray:
    """``|grad u|^2`` in the metric whose Laplacian is ``Delta_beta = L/4``."""
    return first_derivatives(u).grad_norm() ** 2 / 4


def li_yau_quantity(u, grad_sq, u_t):
    return grad_sq / u ** 2 - 2 * u_t / u


@dataclass
class LiYauReport:
    times: list
    sup: list
    dim: int
    """Real dimension ``N`` of the lab space ``R^m x C_beta``."""
    R: float
    C: float
    """Fitted constant in ``sup <= C / R^2 + N / t``."""
    C_double: float
    """Fitted constant for the curve ``C / R^2 + 2N / t``."""
    violations: int
    shift: float = 0.0

    def bound(self, t, C=None, factor: int = 1):
        C = self.C if C is None else C
        return C / self.R ** 2 + factor * self.dim / np.asarray(t)


def li_yau_monitor(field: SpaceTimeField, R: float, centre: BallDomain | None = None,
                   t_range=(0.05, 1.0), shift: float | str | None = None) -> LiYauReport:
    """Per-slice sup over ``B(centre, R/2)`` of ``|grad u|^2/u^2 - 2 u_t/u``.

    ``shift`` (added to ``u``) restores positivity; ``"auto"`` uses
    ``-min u + 1e-6 max(osc, |min u|)`` when ``u`` is not positive and ``None`` raises.
    Constants are caloric, so the shifted field solves the same equation.
    """
    g = field.slices[0].grid
    m = g.m
    centre = centre or BallDomain.at_origin(m, R)
    S, R_, TH = g.coords()
    half = BallDomain(centre.center_s, centre.center_r, centre.center_theta, R / 2).contains(S, R_, TH, g.beta)
    times, sups = [], []
    if shift == "auto":
        lo = min(float(np.nanmin(s.values[s.mask & half])) for s in field.slices)
        hi = max(float(np.nanmax(s.values[s.mask & half])) for s in field.slices)
        sh = 0.0 if lo > 0 else -lo + 1e-6 * max(hi - lo, abs(lo), 1e-300)
    else:
        sh = 0.0 if shift is None else float(shift)
    for i, t in enumerate(field.times):
        if not t_range[0] <= t - field.problem.t0 <= t_range[1]:
            continue
        u = field.slices[i]
        sel = half & u.mask
        v = u.values + sh
        if np.nanmin(v[sel]) <= 0:
            raise ValueError("Li-Yau monitor needs a positive solution")
        q = li_yau_quantity(v, metric_grad_sq(u), field.time_derivative(i))
        times.append(t - field.problem.t0)
        sups.append(float(np.nanmax(q[sel])))
    N = m + 2
    ts, sp_ = np.asarray(times), np.asarray(sups)
    C = float(max(0.0, np.max((sp_ - N / ts) * R ** 2))) if ts.size else 0.0
    C2 = float(max(0.0, np.max((sp_ - 2 * N / ts) * R ** 2))) if ts.size else 0.0
    viol = int(np.sum(sp_ > C / R ** 2 + N / ts + 1e-12)) if ts.size else 0
    return LiYauReport(times, sups, N, R, C, C2, viol, sh)


def gradient_laplacian_bounds(field: SpaceTimeField, R: float, t_range=(0.05, 1.0)) -> dict:
    """Per-time ``sup|grad u|^2 / ((1/R^2 + 1/t) ||u||^2)`` and ``sup|u_t| / ((1/R^2 + 1/t) ||u||)``."""
    g = field.slices[0].grid
    S, R_, TH = g.coords()
    half = BallDomain.at_origin(g.m, R / 2).contains(S, R_, TH, g.beta)
    norm = max(float(np.nanmax(np.abs(s.values))) for s in field.slices)
    out = {"times": [], "grad": [], "ut": []}
    for i, t in enumerate(field.times):
        tt = t - field.problem.t0
        if not t_range[0] <= tt <= t_range[1]:
            continue
        u = field.slices[i]
        sel = half & u.mask
        fac = 1 / R ** 2 + 1 / tt
        gsq = metric_grad_sq(u)[sel]
        ut = field.time_derivative(i)[sel]
        out["times"].append(tt)
        out["grad"].append(float(np.nanmax(gsq)) / (fac * norm ** 2) if norm > 0 else 0.0)
        out["ut"].append(float(np.nanmax(np.abs(ut))) / (fac * norm) if norm > 0 else 0.0)
    return out


# ---------------------------------------------------------------------------
# parabolic Schauder ratios


def schauder_verify_parabolic(field: SpaceTimeField, f, beta: float | None = None, bands=None,
                              count: int = 200, seed: int = 0, omega: ModulusData | None = None,
                              t_top: float | None = None, pair_radius: float = 0.5) -> SchauderReport:
    """Elliptic verifier with the parabolic distance ``d_beta + |t - s|^(1/2)``.

    Pairs are drawn in ``B(0, pair_radius) x (t_top - pair_radius^2, t_top]``;
    the left-hand side adds ``|u_t(P) - u_t(Q)|`` to the tangential family.
    Fields between stored slices are interpolated linearly in time.
    """
    g = field.slices[0].grid
    beta = g.beta if beta is None else beta
    bands = dyadic_bands(6, 1) if bands is None else bands
    om = omega or estimate_modulus(f, BallDomain.at_origin(g.m, 1.0), beta, seed=seed + 7919)
    table = DiniTable(om, beta)
    t_top = field.times[-1] if t_top is None else t_top
    t_bot = t_top - pair_radius ** 2
    idx = [i for i, t in enumerate(field.times) if t >= t_bot - 1e-12]
    if len(idx) < 2:
        raise ValueError("need at least two stored slices in the pair window")
    idx = [max(0, idx[0] - 1)] + idx if field.times[idx[0]] > t_bot else idx
    ts = np.array([field.times[i] for i in idx])
    F = [derivative_fields(field.slices[i]) for i in idx]
    UT = [derivative_fields(ScalarField(g, field.time_derivative(i), field.slices[i].mask)).u for i in idx]
    rng = make_rng(seed + 31337)
    dom = BallDomain.at_origin(g.m, pair_radius)
    sampler = BandSampler(dom, beta, [(0.5 * lo, hi) for lo, hi in bands], count * 2, seed, g.h_r,
                          refine=False)
    sup_u = max(float(np.nanmax(np.abs(s.values[s.mask]))) for s in field.slices)
    gam = 1 / beta - 1

    def at_time(fams, t, s, r, th):
        j = np.clip(np.searchsorted(ts, t, side="right") - 1, 0, ts.size - 2)
        w = np.clip((t - ts[j]) / (ts[j + 1] - ts[j]), 0, 1)
        out = np.zeros_like(r)
        for jj in np.unique(j):
            sel = j == jj
            a = fams(jj)(s[:, sel], r[sel], th[sel])
            b = fams(jj + 1)(s[:, sel], r[sel], th[sel])
            out[sel] = (1 - w[sel]) * a + w[sel] * b
        return out

    c1, c2, npairs = [], [], []
    for (lo, hi), ps in zip(bands, sampler.sets):
        u1 = rng.random(len(ps))
        lag = (u1 * ps.d) ** 2
        d = ps.d + np.sqrt(lag)
        t1 = rng.uniform(t_bot + lag, t_top)
        t2 = t1 - lag
        ok = (d >= lo) & (d < hi) & (t2 >= t_bot)
        s1, r1, th1, s2, r2, th2 = ps.s1[:, ok], ps.r1[ok], ps.th1[ok], ps.s2[:, ok], ps.r2[ok], ps.th2[ok]
        t1, t2, d = t1[ok], t2[ok], d[ok]
        L1 = np.zeros(d.size)
        L2 = np.zeros(d.size)
        n_t = len(F[0].tangential) + 1
        for k in range(n_t):
            fam = (lambda jj, k=k: (F[jj].tangential + [F[jj].W])[k])
            L1 += np.abs(at_time(fam, t1, s1, r1, th1) - at_time(fam, t2, s2, r2, th2))
        L1 += np.abs(at_time(lambda jj: UT[jj], t1, s1, r1, th1) - at_time(lambda jj: UT[jj], t2, s2, r2, th2))
        for k in range(len(F[0].mixed)):
            fam = (lambda jj, k=k: F[jj].mixed[k])
            L2 += np.abs(at_time(fam, t1, s1, r1, th1) - at_time(fam, t2, s2, r2, th2))
        A, B, Cm = table(np.minimum(d, 1 - 1e-9))
        R1 = d * sup_u + A + B
        R2 = d ** gam * sup_u + A + Cm if beta > 0.5 else R1
        c1.append(float(np.nanmax(L1 / R1)) if d.size else math.nan)
        c2.append(float(np.nanmax(L2 / R2)) if d.size else math.nan)
        npairs.append(int(d.size))
    return SchauderReport(beta, [list(b) for b in bands], c1, c2, npairs, sup_u, om.radii.tolist(),
                          om.omega.tolist(), "parabolic")


# ---------------------------------------------------------------------------
# parabolic cascade


@dataclass
class ParabolicCascadeConfig:
    point: ConePoint
    t: float
    params: ConeParams
    f: Callable
    """Source in ``u_t = Delta_beta u + f``."""
    reference: Callable
    """Reference solution ``u(S, R, TH[, t])`` supplying initial and lateral data."""
    depth: int = 6
    tau: float = 0.5
    nodes: tuple = (33, 32, 16)
    steps: int = 32
    """Backward Euler steps per cylinder, fixed across scales."""
    omega: ModulusData | None = None
    seed: int = 0

    def __post_init__(self):
        if self.point.r <= 0:
            raise ParameterError("base point must lie off the singular set")
        if self.depth < 2:
            raise ParameterError("depth must be >= 2")


def parabolic_cascade(cfg: ParabolicCascadeConfig) -> CascadeReport:
    """Cascade over cylinders ``B_k x (t_P - rho_k^2, t_P]`` with constant source ``f(P)``."""
    beta = cfg.params.beta
    p = cfg.point
    k_p = scale_index(p, cfg.tau)
    om = cfg.omega or estimate_modulus(cfg.f, BallDomain.at_origin(len(p.s), 1.0), beta, seed=cfg.seed)
    ps_ = np.asarray(p.s, dtype=float).reshape(-1, 1)
    fp = float(np.asarray(cfg.f(ps_, np.array([p.r]), np.array([p.theta]))).ravel()[0])
    rep = CascadeReport(k_p, cfg.tau, [])
    fields = []
    n_s, n_r, n_t = cfg.nodes
    for k in range(2, cfg.depth + 1):
        ball = cascade_ball(p, k, k_p, cfg.tau)
        grid = GridSpec.for_ball(cfg.params, ball, n_s, n_r, n_t)
        depth = ball.radius ** 2
        t0 = cfg.t - depth
        if t0 < 0:
            rep.truncated = True
            break
        prob = HeatProblem(grid, ball, cfg.reference, cfg.reference, fp, T=depth, dt=depth / cfg.steps,
                           t0=t0, store=[cfg.t])
        try:
            st, hr = solve_cylinder(prob)
        except SolverError as exc:
            rep.error = f"scale {k}: {exc}"
            break
        uk = st.slices[-1]
        ref = _space_time(cfg.reference, grid, cfg.t)
        err = float(np.nanmax(np.abs(uk.values - ref)[uk.mask]))
        F = derivative_fields(uk)
        d2p = [float(T(ps_, np.array([p.r]), np.array([p.theta]))[0]) for T in F.tangential]
        rec = ScaleRecord(k, list(ball.center_s) + [ball.center_r, ball.center_theta], ball.radius,
                          k >= k_p, max(0.0, ball.center_r - ball.radius) if ball.center_r > 0 else 0.0,
                          err, d2p, float(om(np.array([ball.radius]))[0]), iterations=hr.iterations)
        if fields:
            prev = rep.records[-1]
            inner = BallDomain(tuple(p.s), ball.center_r, ball.center_theta, cfg.tau ** (k + 1))
            prev.diff = derivative_decay_monitors(fields[-1], uk, inner, prev.radius, prev.omega)
        rep.records.append(rec)
        fields.append(uk)
    errs = np.array([r.sup_err for r in rep.records])
    ks = np.array([r.k for r in rep.records])
    if errs.size >= 2 and np.all(errs > 0):
        rep.exponent = float(np.polyfit(ks * math.log(cfg.tau), np.log(errs), 1)[0])
    return rep
