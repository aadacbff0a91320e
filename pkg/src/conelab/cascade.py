"""Nested Dirichlet solves at dyadic scales around a base point.

At scale ``k`` the field ``u_k`` solves ``L u_k = 4 f(p)`` with boundary
values from the reference ``u``, on ``B(p, tau^k)`` once that ball avoids
the singular set (``k >= k_p``) and on ``B(p_tilde, 2 tau^k)`` before, with
``p_tilde`` the projection of ``p`` onto the singular set.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .elliptic import DirichletProblem, SolverError, solve_reduced
from .geometry import BallDomain, ConeParams, ConePoint, ParameterError, cone_distance_arrays, dyadic_bands
from .operators import GridSpec, ScalarField, evaluate
from .regularity import (BandSampler, ModulusData, _diff_objective, derivative_fields,
                         estimate_modulus, fitted_exponent)


def scale_index(p: ConePoint, tau: float = 0.5) -> int:
    """Smallest ``k`` with ``tau^k < r_p``."""
    if p.r <= 0:
        raise ParameterError("base point lies on the singular set")
    if not 0 < tau < 1:
        raise ParameterError("tau must lie in (0, 1)")
    k = 0
    while tau ** k >= p.r:
        k += 1
    return k


@dataclass
class CascadeConfig:
    point: ConePoint
    params: ConeParams
    f: Callable
    """Source in ``Delta_beta u = f``, i.e. ``L u = 4 f``; called as ``f(S, R, TH)``."""
    reference: Callable | ScalarField
    """Boundary data source ``u``."""
    depth: int = 6
    tau: float = 0.5
    nodes: tuple = (33, 32, 16)
    """``(n_s, n_r, n_theta)`` per ball, fixed across scales."""
    ambient: BallDomain | None = None
    tol: float = 1e-11
    omega: ModulusData | None = None
    seed: int = 0

    def __post_init__(self):
        if self.point.r <= 0:
            raise ParameterError("base point must lie off the singular set")
        if not 0 < self.tau < 1:
            raise ParameterError("tau must lie in (0, 1)")
        if self.depth < 2:
            raise ParameterError("depth must be >= 2")
        if len(self.point.s) > self.params.tangential_dim:
            raise ParameterError("base point has too many tangential coordinates")
        if self.ambient is not None and self.ambient.m != len(self.point.s):
            raise ParameterError("ambient domain and base point differ in dimension")

    def ambient_domain(self) -> BallDomain:
        return self.ambient or BallDomain.at_origin(len(self.point.s), 1.0)


@dataclass
class ScaleRecord:
    k: int
    centre: list
    radius: float
    on_point: bool
    """True when the ball is centred at ``p`` (``k >= k_p``)."""
    min_r: float
    sup_err: float
    """``sup |u_k - u|`` over the ball's interior nodes."""
    d2_at_p: list
    omega: float
    diff: dict = field(default_factory=dict)
    """Differences to scale ``k + 1`` on the inner ball and their ratios."""
    iterations: int = 0


@dataclass
class CascadeReport:
    k_p: int
    tau: float
    records: list
    exponent: float = math.nan
    truncated: bool = False
    error: str = ""

    def ratios(self, name: str) -> np.ndarray:
        return np.array([r.diff[name] for r in self.records if name in r.diff])

    def bounded(self, name: str, factor: float = 3.0) -> bool:
        v = self.ratios(name)
        if v.size == 0 or not np.all(np.isfinite(v)):
            return False
        med = float(np.median(v))
        return med > 0 and float(v.max()) <= factor * med

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, default=float)


def cascade_ball(p: ConePoint, k: int, k_p: int, tau: float) -> BallDomain:
    if k < k_p:
        return BallDomain(tuple(p.s), 0.0, 0.0, 2 * tau ** k)
    return BallDomain(tuple(p.s), p.r, p.theta, tau ** k)


def _inside(ball: BallDomain, amb: BallDomain, beta: float) -> bool:
    c = np.asarray(ball.center_s, dtype=float).reshape(-1, 1)
    a = np.asarray(amb.center_s, dtype=float).reshape(-1, 1)
    d = cone_distance_arrays(c, np.array([ball.center_r]), np.array([ball.center_theta]),
                             a, amb.center_r, amb.center_theta, beta)
    return float(d[0]) + ball.radius <= amb.radius * (1 + 1e-12)


def _weighted_radial(F, s, r, th, beta, m):
    """``| |z_n|^(1-beta) du/dz_n | = (beta/2) |(d_r - i (beta r)^-1 d_theta) u|``."""
    dr = F.first[m](s, r, th)
    dth = F.first[m + 1](s, r, th) / beta  # first[m+1] is (1/r) d_theta
    return 0.5 * beta * np.hypot(dr, dth)


def _nodes_in(grid: GridSpec, ball: BallDomain, mask):
    S, R, TH = grid.coords()
    sel = ball.contains(S, R, TH, grid.beta) & mask
    return S[:, sel], R[sel], TH[sel]


def derivative_decay_monitors(uk: ScalarField, uk1: ScalarField, inner: BallDomain, rad: float,
                              om: float) -> dict:
    """Sup norms of ``D'(u_k - u_{k+1})``, ``(D')^2(...)`` and the weighted radial
    derivative difference on ``inner``, plus their ratios against
    ``rad * om``, ``om`` and ``rad * om``."""
    g = uk1.grid
    beta, m = g.beta, g.m
    s, r, th = _nodes_in(g, inner, uk1.mask)
    s0, r0, th0 = _nodes_in(uk.grid, inner, uk.mask)
    s = np.concatenate([s, s0], axis=1)
    r = np.concatenate([r, r0])
    th = np.concatenate([th, th0])
    A, B = derivative_fields(uk), derivative_fields(uk1)

    def sup_diff(fa, fb):
        if not fa:
            return 0.0
        return float(max(np.nanmax(np.abs(a(s, r, th) - b(s, r, th))) for a, b in zip(fa, fb)))

    d1 = sup_diff(A.first[:m], B.first[:m])
    d2 = sup_diff(A.tangential, B.tangential)
    wr = float(np.nanmax(np.abs(_weighted_radial(A, s, r, th, beta, m)
                                - _weighted_radial(B, s, r, th, beta, m))))
    out = {"first": d1, "second": d2, "weighted_radial": wr}
    if om > 0:
        out.update(first_ratio=d1 / (rad * om), second_ratio=d2 / om, weighted_radial_ratio=wr / (rad * om))
    return out


def run_cascade(cfg: CascadeConfig) -> CascadeReport:
    beta = cfg.params.beta
    p = cfg.point
    k_p = scale_index(p, cfg.tau)
    amb = cfg.ambient_domain()
    om = cfg.omega or estimate_modulus(cfg.f, amb, beta, seed=cfg.seed)
    fp = float(np.asarray(cfg.f(np.asarray(p.s, dtype=float).reshape(-1, 1), np.array([p.r]),
                                np.array([p.theta]))).ravel()[0])
    rep = CascadeReport(k_p, cfg.tau, [])
    fields = []
    n_s, n_r, n_t = cfg.nodes
    for k in range(2, cfg.depth + 1):
        ball = cascade_ball(p, k, k_p, cfg.tau)
        if not _inside(ball, amb, beta):
            warnings.warn(f"cascade ball at scale {k} leaves the ambient domain; truncating")
            rep.truncated = True
            break
        grid = GridSpec.for_ball(cfg.params, ball, n_s, n_r, n_t)
        prob = DirichletProblem(grid, ball, 4.0 * fp, cfg.reference)
        try:
            uk, st = solve_reduced(prob, cfg.tol)
        except SolverError as exc:
            rep.error = f"scale {k}: {exc}"
            break
        S, R, TH = grid.coords()
        ref = evaluate(cfg.reference, S, R, TH)
        err = float(np.nanmax(np.abs(uk.values - ref)[uk.mask]))
        F = derivative_fields(uk)
        ps = np.asarray(p.s, dtype=float).reshape(-1, 1)
        d2p = [float(T(ps, np.array([p.r]), np.array([p.theta]))[0]) for T in F.tangential]
        min_r = max(0.0, ball.center_r - ball.radius) if ball.center_r > 0 else 0.0
        rec = ScaleRecord(k, list(ball.center_s) + [ball.center_r, ball.center_theta], ball.radius,
                          k >= k_p, min_r, err, d2p, float(om(np.array([ball.radius]))[0]),
                          iterations=st.iterations)
        if fields:
            prev_rec = rep.records[-1]
            inner = BallDomain(tuple(p.s), ball.center_r, ball.center_theta, cfg.tau ** (k + 1))
            prev_rec.diff = derivative_decay_monitors(fields[-1], uk, inner, prev_rec.radius, prev_rec.omega)
        rep.records.append(rec)
        fields.append(uk)
    errs = np.array([r.sup_err for r in rep.records])
    ks = np.array([r.k for r in rep.records])
    if errs.size >= 2 and np.all(errs > 0):
        rep.exponent = float(np.polyfit(ks * math.log(cfg.tau), np.log(errs), 1)[0])
    return rep


@dataclass
class MixedProbe:
    exponent: float
    degenerate: bool
    sups: list


def mixed_modulus_probe(T, beta: float, m: int = 1, bands=None, count: int = 200, seed: int = 0,
                        radius: float = 0.5, r_min: float = 1e-9) -> MixedProbe:
    """Empirical Hölder exponent of a mixed derivative field ``T``.

    ``T`` is a callable ``T(S, R, TH)`` or a grid field (for instance the
    ``d_r D_1 u`` interpolator of :func:`derivative_fields`).  The exponent
    is the log-log slope of the band sups of ``|T(p) - T(q)|`` against the
    band distance, so the seminorm at exponent ``g`` is stable across bands
    exactly for ``g`` up to it.
    """
    bands = dyadic_bands(6, 1) if bands is None else bands
    sampler = BandSampler(BallDomain.at_origin(m, radius), beta, bands, count, seed, r_min)
    obj = _diff_objective(T)
    sets = sampler.refined(obj)
    sups = [float(np.nanmax(obj(ps))) if len(ps) else 0.0 for ps in sets]
    if max(sups, default=0.0) < 1e-12:
        return MixedProbe(math.nan, True, sups)
    return MixedProbe(fitted_exponent(T, sets), False, sups)
