"""Structured cone grids and finite-difference operators.

The assembled operator is the real-normalized conical Laplacian

    L = sum_j d^2/ds_j^2 + d^2/dr^2 + (1/r) d/dr + (beta r)^-2 d^2/dtheta^2,

equal to four times the complex Laplacian of the cone metric.  The radial
grid is staggered (first node at ``r = h/2``) so no node sits on the
singular set; the innermost ring couples to the rest of the grid through
its outward radial flux and the periodic angular stencil only.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import RegularGridInterpolator

from .geometry import TWO_PI, BallDomain, ConeParams, wrap_angle


class GridError(ValueError):
    """Raised for malformed grids or mismatched fields."""


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid over ``(s_1..s_m, r, theta)``.

    ``m`` active tangential coordinates are discretized; the remaining
    ``2n - 2 - m`` are symmetry directions the fields do not depend on.
    ``r_lo=None`` means an axis grid starting at ``h_r/2``; otherwise the
    radial axis is an annulus with nodes on both ends.  ``theta_bounds=None``
    means a full periodic ring, otherwise an angular sector.
    """

    params: ConeParams
    s_bounds: tuple = ()
    s_counts: tuple = ()
    r_max: float = 1.0
    n_r: int = 32
    n_theta: int = 32
    r_lo: float | None = None
    theta_bounds: tuple | None = None

    def __post_init__(self):
        if len(self.s_bounds) != len(self.s_counts):
            raise GridError("s_bounds and s_counts differ in length")
        if self.m > self.params.tangential_dim:
            raise GridError("more active tangential axes than 2n - 2")
        for n in (*self.s_counts, self.n_r, self.n_theta):
            if n < 3:
                raise GridError("grid too coarse: need >= 3 nodes per active direction")
        for lo, hi in self.s_bounds:
            if not hi > lo:
                raise GridError("empty tangential interval")
        if self.r_lo is not None and not (0 < self.r_lo < self.r_max):
            raise GridError("annulus needs 0 < r_lo < r_max")
        if self.theta_bounds is not None and not self.theta_bounds[1] > self.theta_bounds[0]:
            raise GridError("empty angular sector")

    # -- axes -------------------------------------------------------------
    @property
    def beta(self) -> float:
        return self.params.beta

    @property
    def m(self) -> int:
        return len(self.s_counts)

    @property
    def symmetric_dims(self) -> int:
        return self.params.tangential_dim - self.m

    @property
    def axis_grid(self) -> bool:
        return self.r_lo is None

    @property
    def periodic(self) -> bool:
        return self.theta_bounds is None

    @property
    def shape(self) -> tuple:
        return (*self.s_counts, self.n_r, self.n_theta)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def s_axis(self, k: int) -> np.ndarray:
        lo, hi = self.s_bounds[k]
        return np.linspace(lo, hi, self.s_counts[k])

    def h_s(self, k: int) -> float:
        lo, hi = self.s_bounds[k]
        return (hi - lo) / (self.s_counts[k] - 1)

    @property
    def h_r(self) -> float:
        if self.axis_grid:
            return self.r_max / (self.n_r - 0.5)
        return (self.r_max - self.r_lo) / (self.n_r - 1)

    @property
    def r_axis(self) -> np.ndarray:
        if self.axis_grid:
            return (np.arange(self.n_r) + 0.5) * self.h_r
        return np.linspace(self.r_lo, self.r_max, self.n_r)

    @property
    def h_theta(self) -> float:
        if self.periodic:
            return TWO_PI / self.n_theta
        lo, hi = self.theta_bounds
        return (hi - lo) / (self.n_theta - 1)

    @property
    def theta_axis(self) -> np.ndarray:
        if self.periodic:
            return np.arange(self.n_theta) * self.h_theta
        return np.linspace(*self.theta_bounds, self.n_theta)

    def axes(self):
        return [self.s_axis(k) for k in range(self.m)] + [self.r_axis, self.theta_axis]

    def coords(self):
        """Full coordinate arrays ``(S, R, TH)`` with ``S`` of shape ``(m, *shape)``."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        S = np.array(mesh[: self.m]) if self.m else np.empty((0, *self.shape))
        return S, mesh[-2], mesh[-1]

    def edge_mask(self) -> np.ndarray:
        """Nodes on the outer faces of the box (always Dirichlet)."""
        e = np.zeros(self.shape, dtype=bool)
        for k in range(self.m):
            idx = [slice(None)] * len(self.shape)
            idx[k] = [0, -1]
            e[tuple(idx)] = True
        e[..., -1, :] = True
        if not self.axis_grid:
            e[..., 0, :] = True
        if not self.periodic:
            e[..., [0, -1]] = True
        return e

    def ball_mask(self, dom: BallDomain) -> np.ndarray:
        S, R, TH = self.coords()
        return dom.contains(S, R, TH, self.beta)

    # -- constructors -----------------------------------------------------
    @classmethod
    def for_ball(cls, params: ConeParams, dom: BallDomain, n_s: int = 33, n_r: int = 32,
                 n_theta: int = 32) -> "GridSpec":
        """Grid whose interior covers ``dom`` with one layer of nodes outside.

        Balls that meet or nearly meet the singular set get an axis grid with
        a full angular ring; balls well away from it get an annular sector.
        """
        rho = dom.radius
        m = dom.m
        if m:
            a = rho * (n_s - 1) / (n_s - 3)
            s_bounds = tuple((c - a, c + a) for c in dom.center_s)
        else:
            s_bounds = ()
        s_counts = (n_s,) * m
        rc = dom.center_r
        hr_guess = 2 * rho / (n_r - 3)
        if rc - rho - 1.5 * hr_guess <= 0.25 * rho or \
                math.asin(min(1.0, (rho + 1.5 * hr_guess) / rc)) / params.beta > 0.45 * TWO_PI:
            r_max = (rc + rho) * (n_r - 0.5) / (n_r - 1.5)
            return cls(params, s_bounds, s_counts, r_max, n_r, n_theta)
        r_lo = rc - rho - hr_guess
        r_max = rc + rho + hr_guess
        half = math.asin(min(1.0, rho / rc)) / params.beta
        dth = 2 * half / (n_theta - 3)
        tb = (dom.center_theta - half - dth, dom.center_theta + half + dth)
        return cls(params, s_bounds, s_counts, r_max, n_r, n_theta, r_lo=r_lo, theta_bounds=tb)

    def to_header(self) -> dict:
        return {
            "beta": repr(self.beta), "n": str(self.params.n),
            "s_bounds": ";".join(f"{lo!r},{hi!r}" for lo, hi in self.s_bounds),
            "s_counts": ",".join(map(str, self.s_counts)),
            "r_max": repr(self.r_max), "n_r": str(self.n_r), "n_theta": str(self.n_theta),
            "r_lo": "" if self.r_lo is None else repr(self.r_lo),
            "theta_bounds": "" if self.theta_bounds is None else
            f"{self.theta_bounds[0]!r},{self.theta_bounds[1]!r}",
        }

    @classmethod
    def from_header(cls, h: dict) -> "GridSpec":
        sb = tuple(tuple(float(x) for x in part.split(",")) for part in h["s_bounds"].split(";") if part)
        sc = tuple(int(x) for x in h["s_counts"].split(",") if x)
        tb = tuple(float(x) for x in h["theta_bounds"].split(",")) if h["theta_bounds"] else None
        return cls(ConeParams(float(h["beta"]), int(h["n"])), sb, sc, float(h["r_max"]),
                   int(h["n_r"]), int(h["n_theta"]),
                   float(h["r_lo"]) if h["r_lo"] else None, tb)


@dataclass
class ScalarField:
    grid: GridSpec
    values: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.size != self.grid.size:
            raise GridError(f"field has {self.values.size} values, grid has {self.grid.size} nodes")
        self.values = self.values.reshape(self.grid.shape)
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=bool).reshape(self.grid.shape)

    @classmethod
    def from_function(cls, grid: GridSpec, func: Callable, mask=None) -> "ScalarField":
        S, R, TH = grid.coords()
        vals = np.broadcast_to(np.asarray(func(S, R, TH), dtype=float), grid.shape)
        return cls(grid, np.array(vals), mask)

    def masked_values(self) -> np.ndarray:
        return self.values if self.mask is None else self.values[self.mask]

    def osc(self) -> float:
        v = self.masked_values()
        v = v[np.isfinite(v)]
        return float(v.max() - v.min()) if v.size else 0.0

    def sup(self) -> float:
        v = self.masked_values()
        v = v[np.isfinite(v)]
        return float(np.abs(v).max()) if v.size else 0.0

    def interpolator(self, values=None) -> "FieldInterpolator":
        return FieldInterpolator(self.grid, self.values if values is None else values)


# ---------------------------------------------------------------------------
# operator assembly


def _d2_uniform(n: int, h: float, periodic: bool) -> sp.csr_matrix:
    main = -2.0 * np.ones(n)
    off = np.ones(n - 1)
    A = sp.diags([off, main, off], [-1, 0, 1], shape=(n, n), format="lil")
    if periodic:
        A[0, n - 1] = 1.0
        A[n - 1, 0] = 1.0
    return (A / (h * h)).tocsr()


def _radial_block(grid: GridSpec) -> sp.csr_matrix:
    """``d^2/dr^2 + (1/r) d/dr`` in flux form; zero flux through r = 0."""
    n, h, r = grid.n_r, grid.h_r, grid.r_axis
    up = (r[:-1] + 0.5 * h) / (r[:-1] * h * h)
    dn = (r[1:] - 0.5 * h) / (r[1:] * h * h)
    diag = np.empty(n)
    diag[:-1] = -up
    diag[1:] -= dn
    diag[-1] = -dn[-1] - (r[-1] + 0.5 * h) / (r[-1] * h * h)
    return sp.diags([dn, diag, up], [-1, 0, 1], shape=(n, n), format="csr")


def smoothing_factor(r, beta: float, epsilon: float):
    """Coefficient multiplier of the transversal block for the smoothed metric.

    Replacing ``|z_n|`` by ``sqrt(|z_n|^2 + eps^2)`` in the cone metric
    multiplies the transversal part of the Laplacian by
    ``(1 + eps^2 |z_n|^-2)^(1 - beta)`` with ``|z_n| = r^(1/beta)``.
    """
    r = np.asarray(r, dtype=float)
    if epsilon == 0.0 or beta == 1.0:
        return np.ones_like(r)
    return (1.0 + epsilon ** 2 * r ** (-2.0 / beta)) ** (1.0 - beta)


def _kron_all(mats):
    out = mats[0]
    for M in mats[1:]:
        out = sp.kron(out, M, format="csr")
    return out


@dataclass
class ConeOperator:
    grid: GridSpec
    epsilon: float
    matrix: sp.csr_matrix
    boundary_rows: np.ndarray
    weight: np.ndarray = field(repr=False)

    @property
    def interior_rows(self) -> np.ndarray:
        return ~self.boundary_rows


def assemble_laplacian(grid: GridSpec, epsilon: float = 0.0, check: bool = True) -> ConeOperator:
    """Assemble ``L`` (or its smoothed variant) on every node of ``grid``.

    Rows of edge nodes are zero and flagged in ``boundary_rows``.  ``weight``
    is the diagonal symmetrizer: ``diag(weight) @ matrix`` is symmetric on
    the non-edge block.
    """
    if epsilon < 0:
        raise GridError("epsilon must be >= 0")
    m = grid.m
    beta = grid.beta
    I_t = sp.identity(grid.n_theta, format="csr")
    I_s = [sp.identity(n, format="csr") for n in grid.s_counts]
    fac = smoothing_factor(grid.r_axis, beta, epsilon)
    rad = sp.diags(fac) @ _radial_block(grid)
    ang_coef = sp.diags(fac / (beta * grid.r_axis) ** 2)
    D2t = _d2_uniform(grid.n_theta, grid.h_theta, grid.periodic)
    trans = sp.kron(rad, I_t, format="csr") + sp.kron(ang_coef, D2t, format="csr")
    A = _kron_all(I_s + [trans]) if m else trans
    for k in range(m):
        D2s = _d2_uniform(grid.s_counts[k], grid.h_s(k), False)
        mats = [D2s if j == k else I_s[j] for j in range(m)]
        A = A + _kron_all(mats + [sp.identity(grid.n_r * grid.n_theta, format="csr")])
    edge = grid.edge_mask().ravel()
    A = (sp.diags((~edge).astype(float)) @ A).tocsr()
    A.eliminate_zeros()
    w_r = grid.r_axis / fac
    weight = np.broadcast_to(w_r[:, None], grid.shape[-2:])
    weight = np.broadcast_to(weight, grid.shape).ravel().copy()
    op = ConeOperator(grid, float(epsilon), A, edge, weight)
    if check:
        check_m_matrix(op)
    return op


def check_m_matrix(op: ConeOperator, rtol: float = 1e-10) -> None:
    """Assert the discrete maximum principle sign structure on non-edge rows."""
    A = op.matrix
    rows = np.nonzero(op.interior_rows)[0]
    d = A.diagonal()
    if np.any(d[rows] >= 0):
        raise AssertionError("non-negative diagonal at an interior node")
    off = A - sp.diags(d)
    sub = off[rows]
    if sub.nnz and sub.data.min() < 0:
        raise AssertionError("negative off-diagonal stencil coefficient")
    rs = np.asarray(A[rows].sum(axis=1)).ravel()
    if np.any(np.abs(rs) > rtol * np.abs(d[rows])):
        raise AssertionError("interior row sums do not vanish")


def apply(op: ConeOperator, u: ScalarField) -> ScalarField:
    """Matrix-vector product; edge rows return 0."""
    if u.grid != op.grid:
        raise GridError("field and operator live on different grids")
    v = op.matrix @ u.values.ravel()
    return ScalarField(op.grid, v, u.mask)


# ---------------------------------------------------------------------------
# derivative fields


def _diff1(a: np.ndarray, h: float, axis: int, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(a, -1, axis) - np.roll(a, 1, axis)) / (2 * h)
    return np.gradient(a, h, axis=axis, edge_order=2)


def _diff2(a: np.ndarray, h: float, axis: int, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(a, -1, axis) - 2 * a + np.roll(a, 1, axis)) / (h * h)
    a = np.moveaxis(a, axis, 0)
    out = np.empty_like(a)
    out[1:-1] = (a[2:] - 2 * a[1:-1] + a[:-2]) / (h * h)
    if a.shape[0] >= 4:
        out[0] = (2 * a[0] - 5 * a[1] + 4 * a[2] - a[3]) / (h * h)
        out[-1] = (2 * a[-1] - 5 * a[-2] + 4 * a[-3] - a[-4]) / (h * h)
    else:
        out[0] = out[1]
        out[-1] = out[-2]
    return np.moveaxis(out, 0, axis)


@dataclass
class FirstDerivatives:
    ds: list
    dr: np.ndarray
    dtheta: np.ndarray
    """``(1/r) d/dtheta`` as in the operator definition."""
    dtheta_metric: np.ndarray
    """``(1/(beta r)) d/dtheta``, unit length in the cone metric."""

    def grad_norm(self) -> np.ndarray:
        tot = self.dr ** 2 + self.dtheta_metric ** 2
        for d in self.ds:
            tot = tot + d ** 2
        return np.sqrt(tot)

    def as_list(self) -> list:
        return [*self.ds, self.dr, self.dtheta]


def _values(u) -> tuple:
    if isinstance(u, ScalarField):
        return u.grid, u.values
    raise GridError("expected a ScalarField")


def first_derivatives(u: ScalarField) -> FirstDerivatives:
    grid, a = _values(u)
    r = grid.r_axis[:, None]
    ds = [_diff1(a, grid.h_s(k), k, False) for k in range(grid.m)]
    dr = _diff1(a, grid.h_r, grid.m, False)
    th = _diff1(a, grid.h_theta, grid.m + 1, grid.periodic)
    return FirstDerivatives(ds, dr, th / r, th / (grid.beta * r))


def radial_laplacian(grid: GridSpec, a: np.ndarray) -> np.ndarray:
    """``a_rr + a_r / r`` with the operator's flux stencil; one-sided at outer edges."""
    h = grid.h_r
    r = grid.r_axis
    ax = grid.m
    b = np.moveaxis(a, ax, -1)
    out = np.empty_like(b)
    ri = r[1:-1]
    out[..., 1:-1] = ((b[..., 2:] - b[..., 1:-1]) * (ri + 0.5 * h)
                      - (b[..., 1:-1] - b[..., :-2]) * (ri - 0.5 * h)) / (ri * h * h)
    if grid.axis_grid:
        out[..., 0] = 2.0 * (b[..., 1] - b[..., 0]) / (h * h)
    else:
        d2 = (2 * b[..., 0] - 5 * b[..., 1] + 4 * b[..., 2] - b[..., 3]) / (h * h)
        d1 = (-3 * b[..., 0] + 4 * b[..., 1] - b[..., 2]) / (2 * h)
        out[..., 0] = d2 + d1 / r[0]
    d2 = (2 * b[..., -1] - 5 * b[..., -2] + 4 * b[..., -3] - b[..., -4]) / (h * h)
    d1 = (3 * b[..., -1] - 4 * b[..., -2] + b[..., -3]) / (2 * h)
    out[..., -1] = d2 + d1 / r[-1]
    return np.moveaxis(out, -1, ax)


@dataclass
class SecondDerivatives:
    tt: list
    """``tt[i][j] = D_i D_j u`` over active tangential axes."""
    rt: list
    """``rt[j] = d/dr D_j u``."""
    tht: list
    """``tht[j] = (1/r) d/dtheta D_j u``."""
    tht_metric: list
    W: np.ndarray
    """``|z_n|^(2-2beta) d^2 u / dz_n dzbar_n``."""

    @property
    def mixed(self) -> list:
        return [*self.rt, *self.tht]

    def tangential(self) -> list:
        return [x for row in self.tt for x in row]


def weighted_second_derivatives(u: ScalarField, first: FirstDerivatives | None = None) -> SecondDerivatives:
    grid, a = _values(u)
    beta = grid.beta
    first = first or first_derivatives(u)
    r = grid.r_axis[:, None]
    m = grid.m
    tt = [[None] * m for _ in range(m)]
    for i in range(m):
        for j in range(m):
            if i == j:
                tt[i][j] = _diff2(a, grid.h_s(i), i, False)
            elif j < i:
                tt[i][j] = tt[j][i]
            else:
                tt[i][j] = _diff1(first.ds[j], grid.h_s(i), i, False)
    rt = [_diff1(d, grid.h_r, m, False) for d in first.ds]
    th_raw = [_diff1(d, grid.h_theta, m + 1, grid.periodic) for d in first.ds]
    tht = [x / r for x in th_raw]
    tht_m = [x / (beta * r) for x in th_raw]
    a_tt = _diff2(a, grid.h_theta, m + 1, grid.periodic)
    W = 0.25 * beta ** 2 * (radial_laplacian(grid, a) + a_tt / (beta * r) ** 2)
    return SecondDerivatives(tt, rt, tht, tht_m, W)


# ---------------------------------------------------------------------------
# interpolation


class FieldInterpolator:
    """Multilinear interpolation of node values at arbitrary cone points.

    Periodic rings wrap in theta; below the innermost ring the value is held
    constant in r.  Points outside the grid box evaluate to NaN.
    """

    def __init__(self, grid: GridSpec, values: np.ndarray):
        self.grid = grid
        vals = np.asarray(values, dtype=float).reshape(grid.shape)
        axes = grid.axes()
        if grid.periodic:
            vals = np.concatenate([vals, vals[..., :1]], axis=-1)
            axes[-1] = np.append(axes[-1], TWO_PI)
        self._interp = RegularGridInterpolator(tuple(axes), vals, method="linear",
                                               bounds_error=False, fill_value=np.nan)

    def __call__(self, s, r, theta) -> np.ndarray:
        g = self.grid
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        shape = np.broadcast(r, theta).shape
        s = np.asarray(s, dtype=float).reshape((g.m,) + shape) if g.m else np.empty((0,) + shape)
        if g.axis_grid:
            r = np.maximum(r, g.r_axis[0])
        if g.periodic:
            th = wrap_angle(theta)
        else:
            c = 0.5 * sum(g.theta_bounds)
            th = c + wrap_angle(theta - c + math.pi) - math.pi
        pts = np.stack([*s, np.broadcast_to(r, shape), np.broadcast_to(th, shape)], axis=-1)
        return self._interp(pts.reshape(-1, g.m + 2)).reshape(shape)


def evaluate(func_or_field, s, r, theta) -> np.ndarray:
    """Evaluate an analytic function or a field (by interpolation) at points."""
    if isinstance(func_or_field, ScalarField):
        return func_or_field.interpolator()(s, r, theta)
    if isinstance(func_or_field, FieldInterpolator):
        return func_or_field(s, r, theta)
    return np.asarray(func_or_field(np.asarray(s, dtype=float), r, theta), dtype=float)


# ---------------------------------------------------------------------------
# serialization


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_field(path_or_buf, u: ScalarField) -> None:
    """Write ``u`` as ``# key = value`` header lines followed by row-major values."""
    own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
    fh = open(path_or_buf, "w") if own else path_or_buf
    try:
        for k, v in u.grid.to_header().items():
            fh.write(f"# {k} = {v}\n")
        fh.write(f"# shape = {','.join(map(str, u.grid.shape))}\n")
        mask = "" if u.mask is None else "".join("1" if x else "0" for x in u.mask.ravel())
        fh.write(f"# mask = {mask}\n")
        fh.write("value\n")
        for x in u.values.ravel():
            fh.write(_fmt(x) + "\n")
    finally:
        if own:
            fh.close()


def read_field(path_or_buf) -> ScalarField:
    own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
    fh = open(path_or_buf) if own else path_or_buf
    try:
        header, vals = {}, []
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                k, _, v = line[1:].partition("=")
                header[k.strip()] = v.strip()
            elif line and line != "value":
                vals.append(float(line))
    finally:
        if own:
            fh.close()
    grid = GridSpec.from_header(header)
    mask = None
    if header.get("mask"):
        mask = np.array([c == "1" for c in header["mask"]])
    return ScalarField(grid, np.array(vals), mask)


def field_to_string(u: ScalarField) -> str:
    buf = io.StringIO()
    write_field(buf, u)
    return buf.getvalue()
