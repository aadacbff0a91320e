"""Cone coordinates and distances for the flat conical metric.

Points are written in cone coordinates ``(s, r, theta)``: ``s`` holds the
tangential real coordinates, ``r = |z_n|**beta`` is the distance to the
singular hyperplane ``S = {z_n = 0}`` and ``theta = arg z_n``.  In these
coordinates the metric reads ``|ds|^2 + dr^2 + beta^2 r^2 dtheta^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


class ParameterError(ValueError):
    """Raised for invalid or mismatched cone parameters."""


@dataclass(frozen=True)
class ConeParams:
    beta: float
    n: int = 1

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0):
            # beta = 1 is accepted as the flat reduction case
            raise ParameterError(f"beta must lie in (0, 1], got {self.beta}")
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be an integer >= 1, got {self.n}")

    @property
    def tangential_dim(self) -> int:
        return 2 * self.n - 2


def wrap_angle(theta):
    """Normalize angles to [0, 2*pi)."""
    out = np.mod(theta, TWO_PI)
    # mod can return exactly 2*pi for tiny negative inputs
    return np.where(out >= TWO_PI, 0.0, out)


@dataclass(frozen=True, eq=False)
class ConePoint:
    s: tuple = ()
    r: float = 0.0
    theta: float = 0.0
    params: ConeParams | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.r < 0:
            raise ParameterError(f"r must be >= 0, got {self.r}")
        object.__setattr__(self, "s", tuple(float(x) for x in self.s))
        object.__setattr__(self, "r", float(self.r))
        th = 0.0 if self.r == 0.0 else float(wrap_angle(self.theta))
        object.__setattr__(self, "theta", th)

    def __eq__(self, other):
        if not isinstance(other, ConePoint):
            return NotImplemented
        if self.s != other.s or self.r != other.r:
            return False
        # the apex ring is a single point of the cone
        return self.r == 0.0 or self.theta == other.theta

    def __hash__(self):
        return hash((self.s, self.r, 0.0 if self.r == 0.0 else self.theta))

    @classmethod
    def from_complex(cls, s: Sequence[float], zn: complex, beta: float, params=None):
        """Build a point from the tangential coordinates and the complex ``z_n``."""
        return cls(tuple(s), abs(zn) ** beta, float(np.angle(zn)), params)

    def projection(self) -> "ConePoint":
        """Closest point on the singular set."""
        return ConePoint(self.s, 0.0, 0.0, self.params)


@dataclass(frozen=True)
class ParabolicPoint:
    space: ConePoint
    t: float = 0.0

    def __post_init__(self):
        if self.t < 0:
            raise ParameterError(f"t must be >= 0, got {self.t}")


def _beta_of(p: ConePoint, q: ConePoint, beta: float | None) -> float:
    if p.params is not None and q.params is not None and p.params != q.params:
        raise ParameterError("points carry different ConeParams")
    if beta is None:
        par = p.params or q.params
        if par is None:
            raise ParameterError("beta is required when points carry no ConeParams")
        beta = par.beta
    return beta


def cone_angle_gap(theta1, theta2, beta):
    """Unrolled angle between two rays, ``min(beta*dtheta, 2*pi*beta - beta*dtheta)``."""
    dth = np.abs(wrap_angle(np.asarray(theta1) - np.asarray(theta2)))
    a = beta * dth
    return np.minimum(a, TWO_PI * beta - a)


def planar_cone_distance(r1, th1, r2, th2, beta):
    """Distance in the 2D cone of total angle ``2*pi*beta`` (vectorized)."""
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    delta = cone_angle_gap(th1, th2, beta)
    c2 = r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * np.cos(np.minimum(delta, math.pi))
    c = np.sqrt(np.maximum(c2, 0.0))
    # geodesics through the apex once the unrolled gap exceeds pi
    return np.where(delta <= math.pi, c, r1 + r2)


def cone_distance_arrays(s1, r1, th1, s2, r2, th2, beta):
    """Vectorized cone distance; ``s1``/``s2`` have the tangential axis first."""
    c = planar_cone_distance(r1, th1, r2, th2, beta)
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    if s1.size == 0 and s2.size == 0:
        return c
    ds2 = np.sum((s1 - s2) ** 2, axis=0)
    return np.sqrt(ds2 + c * c)


def distance_to_origin(p: ConePoint) -> float:
    return math.sqrt(sum(x * x for x in p.s) + p.r * p.r)


def distance_to_singular_set(p: ConePoint) -> float:
    return p.r


def cone_distance(p: ConePoint, q: ConePoint, beta: float | None = None) -> float:
    """Geodesic distance of the flat cone metric between two points."""
    beta = _beta_of(p, q, beta)
    if len(p.s) != len(q.s):
        raise ParameterError("points have different tangential dimensions")
    ds2 = sum((a - b) ** 2 for a, b in zip(p.s, q.s))
    c = float(planar_cone_distance(p.r, p.theta, q.r, q.theta, beta))
    return math.sqrt(ds2 + c * c)


def parabolic_distance(P: ParabolicPoint, Q: ParabolicPoint, beta: float | None = None) -> float:
    return max(cone_distance(P.space, Q.space, beta), math.sqrt(abs(P.t - Q.t)))


def in_ball(p: ConePoint, center: ConePoint, radius: float, beta: float | None = None) -> bool:
    if radius <= 0:
        raise ParameterError("radius must be positive")
    return cone_distance(p, center, beta) < radius


def geodesic_path(p: ConePoint, q: ConePoint, beta: float, num: int = 65):
    """Sample the minimal geodesic from ``p`` to ``q``.

    Returns arrays ``(s, r, theta)`` of shape ``(m, num)``, ``(num,)``, ``(num,)``.
    The path is a straight segment in the unrolled sector when the angle gap
    is below pi, otherwise it runs through the apex.
    """
    t = np.linspace(0.0, 1.0, num)
    sp = np.asarray(p.s, dtype=float)[:, None]
    sq = np.asarray(q.s, dtype=float)[:, None]
    delta = float(cone_angle_gap(p.theta, q.theta, beta))
    if delta > math.pi:
        total = p.r + q.r
        along = t * total if total > 0 else t * 0.0
        r = np.abs(along - p.r)
        theta = np.where(along < p.r, p.theta, q.theta)
        s = sp + (sq - sp) * t
        return s, r, theta
    # unrolled chart: p on the positive axis, q at signed angle +-delta
    dth = float(wrap_angle(q.theta - p.theta))
    sign = 1.0 if beta * dth <= TWO_PI * beta - beta * dth else -1.0
    a = np.array([p.r, 0.0])
    b = np.array([q.r * math.cos(delta), sign * q.r * math.sin(delta)])
    xy = a[:, None] + (b - a)[:, None] * t
    r = np.hypot(xy[0], xy[1])
    theta = wrap_angle(p.theta + np.arctan2(xy[1], xy[0]) / beta)
    s = sp + (sq - sp) * t
    return s, r, theta


# ---------------------------------------------------------------------------
# pair sampling


@dataclass(frozen=True)
class BallDomain:
    """Metric ball ``B(center, radius)`` in the reduced lab space.

    ``center_s`` holds the active tangential coordinates only.
    """

    center_s: tuple
    center_r: float
    center_theta: float
    radius: float

    @classmethod
    def at_origin(cls, m: int, radius: float = 1.0) -> "BallDomain":
        return cls((0.0,) * m, 0.0, 0.0, radius)

    @classmethod
    def around(cls, p: ConePoint, radius: float) -> "BallDomain":
        return cls(p.s, p.r, p.theta, radius)

    @property
    def m(self) -> int:
        return len(self.center_s)

    def contains(self, s, r, theta, beta):
        c = np.asarray(self.center_s, dtype=float).reshape((-1,) + (1,) * np.ndim(r))
        d = cone_distance_arrays(s, r, theta, c, self.center_r, self.center_theta, beta)
        return d < self.radius


@dataclass
class PairSet:
    """Arrays of point pairs; ``s`` arrays have shape ``(m, count)``."""

    s1: np.ndarray
    r1: np.ndarray
    th1: np.ndarray
    s2: np.ndarray
    r2: np.ndarray
    th2: np.ndarray
    d: np.ndarray
    band: tuple = (0.0, math.inf)

    def __len__(self):
        return int(self.d.size)

    def as_points(self, beta: float | None = None):
        par = None if beta is None else ConeParams(min(beta, 1.0))
        out = []
        for i in range(len(self)):
            p = ConePoint(tuple(self.s1[:, i]), self.r1[i], self.th1[i], par)
            q = ConePoint(tuple(self.s2[:, i]), self.r2[i], self.th2[i], par)
            out.append((p, q))
        return out


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator used for every random stream in the lab."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


def _random_points_in_ball(rng, dom: BallDomain, beta, count, r_min, near_axis_fraction):
    m = dom.m
    out_s = np.empty((m, 0))
    out_r = np.empty(0)
    out_th = np.empty(0)
    need = count
    tries = 0
    while need > 0:
        tries += 1
        if tries > 200:
            raise ValueError("could not sample points in the domain")
        k = max(4 * need, 64)
        lo_r = max(dom.center_r - dom.radius, 0.0)
        hi_r = dom.center_r + dom.radius
        r = rng.uniform(lo_r, hi_r, k)
        # near-axis enrichment with log-uniform distance to S
        nearmask = rng.random(k) < near_axis_fraction
        if lo_r == 0.0 and np.any(nearmask):
            lr = rng.uniform(math.log(max(r_min, 1e-300)), math.log(hi_r), nearmask.sum())
            r[nearmask] = np.exp(lr)
        r = np.maximum(r, r_min)
        if dom.center_r == 0.0 or dom.radius >= dom.center_r:
            th = rng.uniform(0.0, TWO_PI, k)
        else:
            half = min(math.pi, math.asin(min(1.0, dom.radius / dom.center_r)) / beta * 1.05)
            th = wrap_angle(dom.center_theta + rng.uniform(-half, half, k))
        c = np.asarray(dom.center_s, dtype=float)[:, None]
        s = c + rng.uniform(-dom.radius, dom.radius, (m, k))
        ok = dom.contains(s, r, th, beta)
        s, r, th = s[:, ok], r[ok], th[ok]
        take = min(need, r.size)
        out_s = np.concatenate([out_s, s[:, :take]], axis=1)
        out_r = np.concatenate([out_r, r[:take]])
        out_th = np.concatenate([out_th, th[:take]])
        need -= take
    return out_s, out_r, out_th


def _displace(rng, s, r, th, dist, beta, radial_fraction):
    """Move each point by ``dist`` along a random straight line of the local chart."""
    m, k = s.shape
    # random direction on the unit sphere of R^m x R^2
    v = rng.standard_normal((m + 2, k))
    radial = rng.random(k) < radial_fraction
    if np.any(radial):
        v[:, radial] = 0.0
        v[m, radial] = np.where(rng.random(radial.sum()) < 0.5, 1.0, -1.0)
    v /= np.linalg.norm(v, axis=0)
    s2 = s + v[:m] * dist
    x = r + v[m] * dist
    y = v[m + 1] * dist
    r2 = np.hypot(x, y)
    th2 = wrap_angle(th + np.arctan2(y, x) / beta)
    return s2, r2, th2


def sample_pairs(domain: BallDomain, count: int, bands, beta: float, seed: int = 0,
                 r_min: float = 1e-9, near_axis_fraction: float = 0.4,
                 radial_fraction: float = 0.25, max_rounds: int = 60):
    """Seeded point pairs stratified into distance bands.

    Both members of each pair lie in ``domain`` with ``r >= r_min`` and every
    pair's cone distance lies in its band ``[lo, hi)``.

    Returns a list of :class:`PairSet`, one per band.
    """
    if domain.radius <= 0:
        raise ValueError("empty domain")
    bands = [tuple(map(float, b)) for b in bands]
    if count < 0:
        raise ValueError("count must be >= 0")
    if count == 0:
        return []
    rng = make_rng(seed)
    results = []
    for lo, hi in bands:
        if not (0 <= lo < hi):
            raise ValueError(f"invalid band {(lo, hi)}")
        acc = [[], [], [], [], [], [], []]
        got = 0
        for _ in range(max_rounds):
            k = max(2 * (count - got), 64)
            s, r, th = _random_points_in_ball(rng, domain, beta, k, r_min, near_axis_fraction)
            dist = np.exp(rng.uniform(math.log(max(lo, 1e-300)), math.log(hi), k)) if lo > 0 \
                else rng.uniform(0, hi, k)
            s2, r2, th2 = _displace(rng, s, r, th, dist, beta, radial_fraction)
            d = cone_distance_arrays(s, r, th, s2, r2, th2, beta)
            ok = (r2 >= r_min) & domain.contains(s2, r2, th2, beta) & (d >= lo) & (d < hi)
            idx = np.nonzero(ok)[0][: count - got]
            for lst, arr in zip(acc, (s, r, th, s2, r2, th2, d)):
                lst.append(arr[..., idx])
            got += idx.size
            if got >= count:
                break
        m = domain.m
        cat = [np.concatenate(a, axis=-1) if a else np.empty((m, 0)) for a in acc]
        results.append(PairSet(*cat, band=(lo, hi)))
    return results


def dyadic_bands(lo_exp: int = 6, hi_exp: int = 1):
    """Bands ``[2^-(j+1), 2^-j)`` for ``j = hi_exp .. lo_exp - 1``."""
    return [(2.0 ** -(j + 1), 2.0 ** -j) for j in range(hi_exp, lo_exp)]


def _cat_pairs(sets, band):
    fields = list(zip(*[(p.s1, p.r1, p.th1, p.s2, p.r2, p.th2, p.d) for p in sets]))
    return PairSet(*[np.concatenate(f, axis=-1) for f in fields], band=band)


def refine_pairs(ps: PairSet, objective, domain: BallDomain, beta: float, r_min: float = 1e-9,
                 rounds: int = 30, top: int = 16, tries: int = 8, seed: int = 0) -> PairSet:
    """Append locally improved pairs to ``ps`` by stochastic hill climbing.

    ``objective(pairs) -> array`` is maximized; perturbed pairs stay in the
    domain, in the band and at ``r >= r_min``.  The original pairs are kept,
    so any sup over the result is at least the sup over ``ps``.
    """
    if len(ps) == 0:
        return ps
    lo, hi = ps.band
    rng = make_rng(seed + 104729)
    best = ps
    vals = np.asarray(objective(ps), dtype=float)
    extra = []
    step = 0.3
    for _ in range(rounds):
        order = np.argsort(np.where(np.isfinite(vals), vals, -np.inf))[::-1][:top]
        k = order.size * tries
        idx = np.repeat(order, tries)
        scale = step * best.d[idx]

        def jitter(s, r, th):
            s = s[:, idx] + rng.normal(0, 1, (s.shape[0], k)) * scale
            lr = np.log(r[idx]) + rng.normal(0, 1, k) * step * 3
            lr = np.where(rng.random(k) < 0.5, lr, np.log(np.abs(r[idx] + rng.normal(0, 1, k) * scale) + 1e-300))
            th = wrap_angle(th[idx] + rng.normal(0, 1, k) * scale / np.maximum(beta * r[idx], 1e-300))
            return s, np.exp(lr), th

        s1, r1, t1 = jitter(best.s1, best.r1, best.th1)
        s2, r2, t2 = jitter(best.s2, best.r2, best.th2)
        keep1 = rng.random(k) < 0.33
        s1[:, keep1], r1[keep1], t1[keep1] = best.s1[:, idx[keep1]], best.r1[idx[keep1]], best.th1[idx[keep1]]
        d = cone_distance_arrays(s1, r1, t1, s2, r2, t2, beta)
        ok = ((r1 >= r_min) & (r2 >= r_min) & (d >= lo) & (d < hi)
              & domain.contains(s1, r1, t1, beta) & domain.contains(s2, r2, t2, beta))
        if np.any(ok):
            cand = PairSet(s1[:, ok], r1[ok], t1[ok], s2[:, ok], r2[ok], t2[ok], d[ok], ps.band)
            cv = np.asarray(objective(cand), dtype=float)
            extra.append(cand)
            best = _cat_pairs([best.__class__(best.s1[:, order], best.r1[order], best.th1[order],
                                              best.s2[:, order], best.r2[order], best.th2[order],
                                              best.d[order], ps.band), cand], ps.band)
            vals = np.concatenate([vals[order], cv])
        step *= 0.85
    return _cat_pairs([ps] + extra, ps.band) if extra else ps
