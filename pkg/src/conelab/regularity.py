"""Moduli of continuity, Dini integrals, Hölder seminorms and Schauder ratios."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import RegularGridInterpolator

from .geometry import BallDomain, PairSet, dyadic_bands, refine_pairs, sample_pairs
from .operators import (FieldInterpolator, ScalarField, evaluate, first_derivatives,
                        weighted_second_derivatives)


# ---------------------------------------------------------------------------
# modulus of continuity


@dataclass
class ModulusData:
    """Empirical ``omega`` on an increasing radius ladder.

    Between ladder radii ``omega`` is interpolated as a power law (linearly
    where a value vanishes); below the ladder it is extrapolated with the
    exponent of the first segment, above it is held constant.
    """

    radii: np.ndarray
    omega: np.ndarray
    counts: list = field(default_factory=list)
    flagged: list = field(default_factory=list)

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.omega = np.maximum.accumulate(np.asarray(self.omega, dtype=float))
        if np.any(np.diff(self.radii) <= 0):
            raise ValueError("radius ladder must be increasing")

    @classmethod
    def from_function(cls, omega: Callable, radii) -> "ModulusData":
        radii = np.asarray(radii, dtype=float)
        return cls(radii, np.asarray(omega(radii), dtype=float))

    @property
    def p0(self) -> float:
        """Exponent used below the smallest ladder radius."""
        w0, w1 = self.omega[0], self.omega[1]
        if w0 <= 0:
            return math.inf
        return math.log(w1 / w0) / math.log(self.radii[1] / self.radii[0])

    @property
    def is_dini(self) -> bool:
        return self.omega[0] == 0 or self.p0 > 1e-3

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        R, W = self.radii, self.omega
        lo = r < R[0]
        if W[0] > 0:
            out[lo] = W[0] * (r[lo] / R[0]) ** self.p0
        else:
            out[lo] = 0.0
        hi = r >= R[-1]
        out[hi] = W[-1]
        mid = ~(lo | hi)
        if np.any(mid):
            i = np.searchsorted(R, r[mid], side="right") - 1
            a, b, wa, wb = R[i], R[i + 1], W[i], W[i + 1]
            pos = (wa > 0) & (wb > 0)
            with np.errstate(divide="ignore", invalid="ignore"):
                pw = wa * (r[mid] / a) ** (np.log(wb / wa) / np.log(b / a))
            lin = wa + (wb - wa) * (r[mid] - a) / (b - a)
            out[mid] = np.where(pos, pw, lin)
        return out

    def doubling_violation(self, tol: float = 1e-12) -> float:
        """Largest excess of ``omega(2r)`` over ``2 omega(r)`` on the ladder."""
        r = self.radii[self.radii * 2 <= self.radii[-1]]
        if r.size == 0:
            return 0.0
        return float(max(0.0, np.max(self(2 * r) - 2 * self(r) - tol)))


def default_ladder(lo_exp: int = 12, hi_exp: int = 0) -> np.ndarray:
    return 2.0 ** -np.arange(lo_exp, hi_exp - 1, -1, dtype=float)


@dataclass
class BandSampler:
    """Seeded pairs per distance band, refined towards the sup of each objective.

    Random pairs rarely land on the extremal configurations (one endpoint
    almost on the singular set, the other on a favourable ray), so each
    band's sup is polished by :func:`refine_pairs`.  Refinement only adds
    pairs, so sups never decrease.
    """

    domain: BallDomain
    beta: float
    bands: list
    count: int = 200
    seed: int = 0
    r_min: float = 1e-9
    refine: bool = True

    def __post_init__(self):
        self.bands = [tuple(map(float, b)) for b in self.bands]
        self._sets = None

    @property
    def sets(self) -> list:
        if self._sets is None:
            self._sets = sample_pairs(self.domain, self.count, self.bands, self.beta,
                                      seed=self.seed, r_min=self.r_min)
        return self._sets

    def refined(self, objective) -> list:
        if not self.refine:
            return self.sets
        return [refine_pairs(ps, objective, self.domain, self.beta, self.r_min, seed=self.seed + i)
                for i, ps in enumerate(self.sets)]

    def sups(self, objective) -> list:
        out = []
        for ps in self.refined(objective):
            v = np.asarray(objective(ps), dtype=float) if len(ps) else np.zeros(0)
            v = v[np.isfinite(v)]
            out.append(float(v.max()) if v.size else 0.0)
        return out


def _as_sets(pairs, objective) -> list:
    if isinstance(pairs, BandSampler):
        return pairs.refined(objective)
    return list(pairs)


def _diff_objective(T):
    def obj(ps):
        return np.abs(evaluate(T, ps.s1, ps.r1, ps.th1) - evaluate(T, ps.s2, ps.r2, ps.th2))
    return obj


def estimate_modulus(f, domain: BallDomain, beta: float, ladder=None, count: int = 200,
                     seed: int = 0, r_min: float = 1e-9, refine: bool = True) -> ModulusData:
    """Running max of ``|f(p) - f(q)|`` over seeded pairs with ``d(p, q) < r``.

    ``f`` is a callable ``f(S, R, TH)`` or a grid field.  Bands with fewer
    than ``count`` pairs are listed in ``flagged``.
    """
    radii = default_ladder() if ladder is None else np.asarray(ladder, dtype=float)
    bands = [(0.5 * radii[0], radii[0])] + list(zip(radii[:-1], radii[1:]))
    sampler = BandSampler(domain, beta, bands, count, seed, r_min, refine)
    counts = [len(ps) for ps in sampler.sets]
    flagged = [ps.band for ps in sampler.sets if len(ps) < count]
    sups = sampler.sups(_diff_objective(f))
    return ModulusData(radii, np.maximum.accumulate(sups), counts, flagged)


# ---------------------------------------------------------------------------
# Dini integrals


def _seg_integral(a, b, wa, wb, q):
    """``int_a^b omega(r) r^-q dr`` with ``omega`` interpolated as in :class:`ModulusData`."""
    if wa > 0 and wb > 0:
        p = math.log(wb / wa) / math.log(b / a)
        e = p - q + 1
        c = wa * a ** (-p)
        if abs(e) < 1e-12:
            return c * math.log(b / a)
        return c * (b ** e - a ** e) / e
    if wa == 0 and wb == 0:
        return 0.0
    c1 = (wb - wa) / (b - a)
    c0 = wa - c1 * a

    def prim(r, k):
        e = k - q + 1
        return math.log(r) if abs(e) < 1e-12 else r ** e / e

    return c0 * (prim(b, 0) - prim(a, 0)) + c1 * (prim(b, 1) - prim(a, 1))


def _integral(om: ModulusData, lo: float, hi: float, q: float) -> float:
    if hi <= lo:
        return 0.0
    R = om.radii
    pts = np.unique(np.concatenate([[lo, hi], R[(R > lo) & (R < hi)]]))
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if a < R[0]:
            w0 = om.omega[0]
            if w0 == 0:
                continue
            p = om.p0
            e = p - q + 1
            c = w0 * R[0] ** (-p)
            if a == 0:
                if e <= 0:
                    return math.inf
                total += c * b ** e / e
            else:
                total += c * (math.log(b / a) if abs(e) < 1e-12 else (b ** e - a ** e) / e)
            continue
        if a >= R[-1]:
            w = om.omega[-1]
            total += w * (math.log(b / a) if q == 1 else (b ** (1 - q) - a ** (1 - q)) / (1 - q))
            continue
        wa, wb = om(np.array([a, b]))
        total += _seg_integral(a, b, float(wa), float(wb), q)
    return total


@dataclass
class DiniResult:
    A: float
    B: float
    C: float
    dini: bool


def dini_integrals(om: ModulusData, d: float, beta: float) -> DiniResult:
    """``A = int_0^d w/r``, ``B = d int_d^1 w/r^2``, ``C = d^(1/beta-1) int_d^1 w/r^(1/beta)``."""
    if not 0 < d < 1:
        raise ValueError("need 0 < d < 1")
    A = _integral(om, 0.0, d, 1.0)
    B = d * _integral(om, d, 1.0, 2.0)
    C = d ** (1 / beta - 1) * _integral(om, d, 1.0, 1 / beta)
    return DiniResult(A, B, C, bool(np.isfinite(A)))


class DiniTable:
    """``A, B, C`` tabulated on a log grid of ``d`` and interpolated in log-log."""

    def __init__(self, om: ModulusData, beta: float, n: int = 600, d_min: float = 1e-7):
        self.d = np.geomspace(d_min, 1 - 1e-9, n)
        vals = np.array([[r.A, r.B, r.C] for r in (dini_integrals(om, float(x), beta) for x in self.d)])
        self.dini = bool(np.all(np.isfinite(vals[:, 0])))
        with np.errstate(divide="ignore"):
            self._log = np.log(np.maximum(vals, 1e-300))
        self._ld = np.log(self.d)

    def __call__(self, d):
        ld = np.log(np.asarray(d, dtype=float))
        return tuple(np.exp(np.interp(ld, self._ld, self._log[:, j])) for j in range(3))


def dini_arrays(om: ModulusData, d: np.ndarray, beta: float):
    d = np.asarray(d, dtype=float)
    out = np.array([[r.A, r.B, r.C] for r in (dini_integrals(om, float(x), beta) for x in d.ravel())])
    return out[:, 0].reshape(d.shape), out[:, 1].reshape(d.shape), out[:, 2].reshape(d.shape)


# ---------------------------------------------------------------------------
# Hölder seminorms


def band_quotients(T, alpha: float, pairs) -> list:
    """Per-band sup of ``|T(p) - T(q)| / d^alpha``.

    ``pairs`` is a :class:`BandSampler` (refined sups) or a list of pair sets.
    """
    base = _diff_objective(T)

    def obj(ps):
        return base(ps) / ps.d ** alpha

    out = []
    for ps in _as_sets(pairs, obj):
        v = obj(ps) if len(ps) else np.zeros(0)
        v = v[np.isfinite(v)]
        out.append(float(v.max()) if v.size else 0.0)
    return out


def holder_seminorm(T, alpha: float, pairs) -> float:
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    q = band_quotients(T, alpha, pairs)
    return max(q) if q else 0.0


def fitted_exponent(T, pairs) -> float:
    """Slope of ``log sup|T(p) - T(q)|`` against ``log d`` across bands (nan if degenerate)."""
    obj = _diff_objective(T)
    xs, ys = [], []
    for ps in _as_sets(pairs, obj):
        if len(ps) == 0:
            continue
        sup = float(np.nanmax(obj(ps)))
        if sup > 1e-13:
            xs.append(math.log(math.sqrt(ps.band[0] * ps.band[1])))
            ys.append(math.log(sup))
    if len(xs) < 2:
        return math.nan
    return float(np.polyfit(xs, ys, 1)[0])


# ---------------------------------------------------------------------------
# derivative fields


@dataclass
class DerivativeFields:
    """Interpolators of the derivative families entering the Schauder norms."""

    tangential: list
    W: FieldInterpolator
    mixed: list
    first: list
    u: FieldInterpolator


def derivative_fields(u: ScalarField) -> DerivativeFields:
    d1 = first_derivatives(u)
    d2 = weighted_second_derivatives(u, d1)
    g = u.grid

    def I(a):
        return FieldInterpolator(g, a)

    tang = [I(a) for i, row in enumerate(d2.tt) for j, a in enumerate(row) if j >= i]
    return DerivativeFields(tang, I(d2.W), [I(a) for a in d2.mixed],
                            [I(a) for a in d1.as_list()], I(u.values))


# ---------------------------------------------------------------------------
# Schauder verification


@dataclass
class SchauderReport:
    beta: float
    bands: list
    const1: list
    """Per-band max of LHS1/RHS1 (tangential second differences and W)."""
    const2: list
    """Per-band max of LHS2/RHS2 (mixed differences)."""
    pairs_per_band: list
    sup_u: float
    omega_radii: list = field(default_factory=list)
    omega: list = field(default_factory=list)
    variant: str = "elliptic"
    extra: dict = field(default_factory=dict)

    @staticmethod
    def _bounded(c) -> bool:
        c = np.asarray(c, dtype=float)
        if not np.all(np.isfinite(c)):
            return False
        med = float(np.median(c))
        return med > 0 and float(c.max()) <= 3 * med

    @property
    def bounded1(self) -> bool:
        return self._bounded(self.const1)

    @property
    def bounded2(self) -> bool:
        return self._bounded(self.const2)

    def to_json(self) -> str:
        d = asdict(self)
        d["bounded1"], d["bounded2"] = self.bounded1, self.bounded2
        return json.dumps(d, sort_keys=True, default=float)


def _pair_values(F: DerivativeFields, ps: PairSet, t=None):
    def diff(fields):
        tot = np.zeros(len(ps))
        for T in fields:
            tot += np.abs(T(ps.s1, ps.r1, ps.th1) - T(ps.s2, ps.r2, ps.th2))
        return tot

    return diff(F.tangential + [F.W]), diff(F.mixed)


def _modulus_for(f, beta: float, m: int, seed: int, omega: ModulusData | None):
    if omega is not None:
        return omega
    return estimate_modulus(f, BallDomain.at_origin(m, 1.0), beta, seed=seed + 7919)


def schauder_verify_elliptic(u: ScalarField, f, beta: float | None = None, bands=None,
                             count: int = 200, seed: int = 0, omega: ModulusData | None = None,
                             pair_radius: float = 0.5, variant: str | None = None) -> SchauderReport:
    """Band constants of the pointwise Schauder estimate for a solved field.

    ``u`` solves ``L u = 4 f`` on ``B(0, 1)``; pairs are drawn in
    ``B(0, pair_radius)`` with both points at least one radial cell off the
    singular set.  For ``beta <= 1/2`` the mixed differences are measured
    against the Lipschitz-type right-hand side.
    """
    g = u.grid
    beta = g.beta if beta is None else beta
    if variant is None:
        variant = "elliptic" if beta > 0.5 else "small_beta"
    bands = dyadic_bands(6, 1) if bands is None else bands
    om = _modulus_for(f, beta, g.m, seed, omega)
    table = DiniTable(om, beta)
    F = derivative_fields(u)
    sampler = BandSampler(BallDomain.at_origin(g.m, pair_radius), beta, bands, count, seed, g.h_r)
    sup_u = u.sup()
    gam = 1 / beta - 1

    def ratio1(ps):
        A, B, _ = table(ps.d)
        return _pair_values(F, ps)[0] / (ps.d * sup_u + A + B)

    def ratio2(ps):
        A, B, Cm = table(ps.d)
        rhs = ps.d * sup_u + A + B if variant == "small_beta" else ps.d ** gam * sup_u + A + Cm
        return _pair_values(F, ps)[1] / rhs

    c1 = sampler.sups(ratio1)
    c2 = sampler.sups(ratio2)
    return SchauderReport(beta, [list(b) for b in bands], c1, c2, [len(p) for p in sampler.sets],
                          sup_u, om.radii.tolist(), om.omega.tolist(), variant)


def schauder_verify_small_beta(u: ScalarField, f, beta: float | None = None, **kw) -> SchauderReport:
    beta = u.grid.beta if beta is None else beta
    if beta > 0.5:
        raise ValueError("small-beta variant needs beta <= 1/2")
    return schauder_verify_elliptic(u, f, beta, variant="small_beta", **kw)


def hessian_bound_ratio(u: ScalarField, f, omega: ModulusData | None = None, radius: float = 0.5,
                        seed: int = 0) -> float:
    """``sup_{B(0, radius)} (|(D')^2 u| + |W(u)|) / (||u|| + A(1) + |f(0)|)``."""
    g = u.grid
    om = _modulus_for(f, g.beta, g.m, seed, omega)
    d1 = first_derivatives(u)
    d2 = weighted_second_derivatives(u, d1)
    S, R, TH = g.coords()
    rho = np.sqrt(np.sum(S ** 2, axis=0) + R ** 2) if g.m else R
    sel = (rho < radius) & (u.mask if u.mask is not None else True)
    tot = np.abs(d2.W)
    for a in d2.tangential():
        tot = tot + np.abs(a)
    A1 = _integral(om, 0.0, 1.0, 1.0)
    f0 = float(np.abs(evaluate(f, np.zeros((g.m, 1)), np.array([0.0]), np.array([0.0])))[0])
    return float(np.nanmax(tot[sel]) / (u.sup() + A1 + f0))


# ---------------------------------------------------------------------------
# sharp alpha family


def sharp_family(alpha: float, beta: float):
    """Source and exact solution of ``L u = 4 f`` whose norm blows up at both ends.

    With ``rho^2 = s^2 + r^2`` and the harmonic polynomials
    ``P = s^2 - r^2/2`` (degree 2) and ``H = s r^(1/beta) cos(theta)``
    (degree ``2 + gamma``, ``gamma = 1/beta - 1``) on ``R x C_beta``,

        f = rho^(alpha-2) P + rho^(alpha-gamma-2) H,

    is homogeneous of degree ``alpha``.  The solution picks up the factors
    ``1/alpha`` and ``1/(gamma - alpha)`` from the identity
    ``L(rho^a P_k) = a (a + 1 + 2k) rho^(a-2) P_k``.
    """
    gam = 1 / beta - 1
    k2 = 2 + gam
    c1 = 4.0 / (alpha * (alpha + 5))
    c2 = 4.0 / ((alpha - gam) * (alpha - gam + 1 + 2 * k2))

    def parts(S, R, TH):
        s = np.asarray(S)[0]
        rho = np.sqrt(s ** 2 + R ** 2)
        P = s ** 2 - 0.5 * R ** 2
        H = s * R ** (1 / beta) * np.cos(TH)
        return rho, P, H

    def f(S, R, TH):
        rho, P, H = parts(S, R, TH)
        return rho ** (alpha - 2) * P + rho ** (alpha - gam - 2) * H

    def u(S, R, TH):
        rho, P, H = parts(S, R, TH)
        return c1 * rho ** alpha * P + c2 * rho ** (alpha - gam) * H

    return f, u


def c2alpha_norm(u: ScalarField, alpha: float, bands=None, count: int = 200, seed: int = 0,
                 radius: float = 0.5) -> float:
    """Measured interior ``C^{2,alpha}_beta`` norm on ``B(0, radius)``."""
    g = u.grid
    bands = dyadic_bands(6, 1) if bands is None else bands
    F = derivative_fields(u)
    sets = BandSampler(BallDomain.at_origin(g.m, radius), g.beta, bands, count, seed, g.h_r)
    S, R, TH = g.coords()
    rho = np.sqrt(np.sum(S ** 2, axis=0) + R ** 2) if g.m else R
    sel = (rho < radius) & (u.mask if u.mask is not None else True)
    d1 = first_derivatives(u)
    d2 = weighted_second_derivatives(u, d1)
    fams = d2.tangential() + [d2.W] + d2.mixed
    total = float(np.nanmax(np.abs(u.values[sel])))
    total += sum(float(np.nanmax(np.abs(a[sel]))) for a in d1.as_list())
    total += sum(float(np.nanmax(np.abs(a[sel]))) for a in fams)
    for T in F.tangential + [F.W] + F.mixed:
        total += holder_seminorm(T, alpha, sets)
    return total


@dataclass
class AlphaSweep:
    beta: float
    alphas: list
    norms: list
    bounds: list
    """``1/(alpha (amax - alpha))``."""
    C: float
    ratios: list
    """``norm / (C bound)``."""

    @property
    def covered(self) -> bool:
        return all(r <= 1 + 1e-12 for r in self.ratios)

    @property
    def bounded(self) -> bool:
        """The fitted constant is not driven by one alpha: max <= 3 x median of norm/bound."""
        nb = np.asarray(self.norms) / np.asarray(self.bounds)
        return float(nb.max()) <= 3 * float(np.median(nb))

    @property
    def blowup(self) -> bool:
        n = np.asarray(self.norms)
        mid = int(np.argmin(np.abs(np.asarray(self.alphas) - 0.5 * self.amax)))
        return n[0] > n[mid] and n[-1] > n[mid]

    @property
    def amax(self) -> float:
        return min(1 / self.beta - 1, 1.0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["alpha", "norm", "bound", "ratio"])
        for row in zip(self.alphas, self.norms, self.bounds, self.ratios):
            w.writerow([format(float(x), ".17g") for x in row])
        return buf.getvalue()


def alpha_sweep(beta: float, alphas: Sequence[float], solver: Callable, **norm_kw) -> AlphaSweep:
    """Run ``solver(alpha) -> ScalarField`` over ``alphas`` and fit one constant.

    The solver is expected to solve the sharp family of :func:`sharp_family`
    (or any family whose norm is to be compared with the bound).
    """
    amax = min(1 / beta - 1, 1.0)
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("empty alpha grid")
    for a in alphas:
        if not 0 < a < amax:
            raise ValueError(f"alpha={a} outside (0, {amax:.4g})")
    norms = [c2alpha_norm(solver(a), a, **norm_kw) for a in alphas]
    bounds = [1 / (a * (amax - a)) for a in alphas]
    C = max(n / b for n, b in zip(norms, bounds))
    return AlphaSweep(beta, alphas, norms, bounds, C, [n / (C * b) for n, b in zip(norms, bounds)])


# ---------------------------------------------------------------------------
# beta = 1/2 double cover


def double_cover_solve(boundary_z: Callable, n: int = 257, rhs_z: Callable | None = None):
    """Solve the lifted problem on the unit disk of ``w`` with ``z = w^2``.

    For ``beta = 1/2`` the cone coordinates are ``r = |w|`` and
    ``theta = 2 arg w``, and the conical operator becomes the Euclidean
    Laplacian in ``w``.  ``boundary_z`` and ``rhs_z`` are functions of the
    cone coordinates ``(r, theta)``; the right-hand side is that of ``L``.
    Returns an interpolator ``(r, theta) -> u``.
    """
    x = np.linspace(-1.0, 1.0, n)
    h = x[1] - x[0]
    X, Y = np.meshgrid(x, x, indexing="ij")
    R = np.hypot(X, Y)
    TH = 2 * np.arctan2(Y, X)
    inside = R < 1.0
    inside[[0, -1], :] = False
    inside[:, [0, -1]] = False
    idx = -np.ones(X.shape, dtype=int)
    idx[inside] = np.arange(inside.sum())
    vals = np.where(~inside, boundary_z(R, TH), 0.0)
    N = int(inside.sum())
    rows, cols, data = [], [], []
    rhs = np.zeros(N)
    if rhs_z is not None:
        rhs += rhs_z(R[inside], TH[inside]) * h * h
    I, J = np.nonzero(inside)
    k = idx[I, J]
    rows.append(k), cols.append(k), data.append(np.full(N, -4.0))
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        nb = idx[I + di, J + dj]
        ok = nb >= 0
        rows.append(k[ok]), cols.append(nb[ok]), data.append(np.ones(ok.sum()))
        rhs[~ok] -= vals[I[~ok] + di, J[~ok] + dj]
    A = sp.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    sol = spla.spsolve(A.tocsc(), rhs)
    U = vals.copy()
    U[inside] = sol
    interp = RegularGridInterpolator((x, x), U, bounds_error=False, fill_value=np.nan)

    def at(r, theta):
        r = np.asarray(r, dtype=float)
        phi = 0.5 * np.asarray(theta, dtype=float)
        pts = np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)
        return interp(pts.reshape(-1, 2)).reshape(np.broadcast(r, phi).shape)

    return at
