"""Conical Poisson equation on the unit disk in one complex dimension.

Solves ``|z|^(2-2beta) d^2u/dz dzbar = F`` with ``u = g`` on ``|z| = 1``
through the Green representation

    u(z) = h(z) + 4 * integral G(z, w) F(w) |w|^(2 beta - 2) dA(w),
    G(z, w) = (1/2pi) log(|w - z| / |1 - conj(w) z|),

where ``h`` is the harmonic extension of ``g``.  The factor 4 converts the
complex Laplacian into the Euclidean one, so that ``F = beta^2`` returns
``|z|^(2 beta)``.

The angular integral is done exactly by expanding the kernel in a Fourier
series in ``arg w`` and transforming samples of ``F`` on each ring.  The
radial integral uses the variable ``t = |w|^(2 beta)``, which absorbs the
weight, and Gauss-Legendre panels graded geometrically towards ``t = 0``
and towards the ring through ``z``.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import ParameterError


class QuadratureError(RuntimeError):
    """Ring doubling disagrees above the requested tolerance."""


def green_kernel(z, w):
    """Dirichlet Green function of the unit disk for the Euclidean Laplacian."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    num = np.abs(w - z)
    if np.any(num == 0):
        raise ZeroDivisionError("green_kernel is singular at z = w")
    return np.log(num / np.abs(1 - np.conj(w) * z)) / (2 * math.pi)


@dataclass(frozen=True)
class DiskProblem:
    beta: float
    F: Callable
    """Right-hand side, called on complex arrays."""
    boundary: Callable | None = None
    """Boundary data on the unit circle, called on complex arrays."""

    def __post_init__(self):
        if not 0.5 < self.beta < 1.0:
            raise ParameterError("the disk solver needs 1/2 < beta < 1")


@dataclass(frozen=True)
class Quadrature:
    n_panels: int = 16
    order: int = 12
    ratio: float = 0.3
    n_phi: int = 32
    n_boundary: int = 256

    def doubled(self) -> "Quadrature":
        return Quadrature(2 * self.n_panels, self.order, math.sqrt(self.ratio),
                          2 * self.n_phi, 2 * self.n_boundary)


def _graded_nodes(a: float, b: float, toward_a: bool, q: Quadrature):
    """Gauss-Legendre nodes on ``[a, b]`` with panels shrinking at one end."""
    if b <= a:
        return np.empty(0), np.empty(0)
    L = b - a
    frac = q.ratio ** np.arange(q.n_panels + 1)
    if toward_a:
        br = np.concatenate([[a], a + L * frac[::-1]])
    else:
        br = np.concatenate([b - L * frac, [b]])
    x, wts = np.polynomial.legendre.leggauss(q.order)
    lo, hi = br[:-1, None], br[1:, None]
    t = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    ww = 0.5 * (hi - lo) * wts
    return t.ravel(), ww.ravel()


class RieszSolution:
    """Evaluator for the solution of a :class:`DiskProblem`."""

    def __init__(self, prob: DiskProblem, quad: Quadrature | None = None):
        self.prob = prob
        self.quad = quad or Quadrature()
        nb = self.quad.n_boundary
        if prob.boundary is None:
            self._ghat = np.zeros(1, dtype=complex)
        else:
            phi = 2 * math.pi * np.arange(nb) / nb
            g = np.asarray(prob.boundary(np.exp(1j * phi)), dtype=float) * np.ones(nb)
            self._ghat = np.fft.fft(g)[: nb // 2] / nb

    # -- harmonic part ----------------------------------------------------
    def harmonic(self, z):
        z = np.asarray(z, dtype=complex)
        k = np.arange(self._ghat.size)
        zk = z[..., None] ** k
        c = np.where(k == 0, 1.0, 2.0) * self._ghat
        return np.real(np.sum(c * zk, axis=-1))

    def harmonic_dz(self, z):
        z = np.asarray(z, dtype=complex)
        k = np.arange(1, self._ghat.size)
        if k.size == 0:
            return np.zeros(z.shape, dtype=complex)
        zk = z[..., None] ** (k - 1)
        return np.sum(k * self._ghat[1:] * zk, axis=-1)

    # -- potential part ---------------------------------------------------
    def _rings(self, t, quad):
        """Fourier coefficients ``F_m(rho)`` of ``F`` on rings ``rho = t^(1/2beta)``."""
        rho = t ** (0.5 / self.prob.beta)
        nphi = quad.n_phi
        phi = 2 * math.pi * np.arange(nphi) / nphi
        w = rho[:, None] * np.exp(1j * phi)[None, :]
        Fv = np.asarray(self.prob.F(w), dtype=float) * np.ones(w.shape)
        return rho, np.fft.fft(Fv, axis=1)[:, : nphi // 2] / nphi

    def _dz_at_origin(self, quad: Quadrature) -> complex:
        """``-2 int_0^1 (rho^(2beta-2) - rho^(2beta)) F_1(rho) d rho`` for the m = 1 mode.

        The singular part is integrated in ``v = rho^(2beta-1)``, where it is smooth.
        """
        beta = self.prob.beta
        v, wv = _graded_nodes(0.0, 1.0, True, quad)
        rho_v = v ** (1 / (2 * beta - 1))
        _, Fa = self._rings(rho_v ** (2 * beta), quad)
        rho, wr = _graded_nodes(0.0, 1.0, True, quad)
        _, Fb = self._rings(rho ** (2 * beta), quad)
        sing = np.sum(wv * Fa[:, 1]) / (2 * beta - 1)
        reg = np.sum(wr * rho ** (2 * beta) * Fb[:, 1])
        return complex(-2 * (sing - reg))

    def _potential_one(self, z: complex, quad: Quadrature):
        beta = self.prob.beta
        zeta = abs(z)
        psi = math.atan2(z.imag, z.real)
        tz = zeta ** (2 * beta)
        if zeta == 0.0:
            t, wt = _graded_nodes(0.0, 1.0, True, quad)
        else:
            parts = [_graded_nodes(0.0, 0.5 * tz, True, quad),
                     _graded_nodes(0.5 * tz, tz, False, quad),
                     _graded_nodes(tz, 1.0, True, quad)]
            t = np.concatenate([p[0] for p in parts])
            wt = np.concatenate([p[1] for p in parts])
        rho, Fm = self._rings(t, quad)
        wt = wt / (2 * beta)  # rho^(2beta-1) d rho = dt / (2 beta)
        nm = Fm.shape[1]
        m = np.arange(1, nm)
        inner = rho < zeta
        M = np.where(inner, zeta, rho)
        mu = np.where(inner, rho, zeta)
        eim = np.exp(1j * m * psi)
        X = Fm[:, 1:] * eim[None, :]
        if zeta == 0.0:
            u = 4 * np.sum(wt * Fm[:, 0].real * np.log(rho))
            return float(u), self._dz_at_origin(quad) if nm > 1 else 0j
        lr = np.log(mu / M)[:, None] * m
        a = np.exp(lr)                                   # (mu/M)^m
        b = np.exp(np.log(rho * zeta)[:, None] * m)      # (rho zeta)^m
        g = a - b
        ang = Fm[:, 0].real * np.log(M) - np.sum(g / m * X.real, axis=1)
        u = 4 * np.sum(wt * ang)
        sgn = np.where(inner, -1.0, 1.0)[:, None]
        dzeta = (np.where(inner, Fm[:, 0].real, 0.0) - np.sum((sgn * a - b) * X.real, axis=1)) / zeta
        dpsi = -np.sum(g * (1j * X).real, axis=1)
        u_zeta = 4 * np.sum(wt * dzeta)
        u_psi = 4 * np.sum(wt * dpsi)
        dz = 0.5 * np.exp(-1j * psi) * (u_zeta - 1j * u_psi / zeta)
        return float(u), complex(dz)

    def evaluate(self, z, quad: Quadrature | None = None):
        """Return ``(u(z), du/dz(z))`` for an array of interior points."""
        quad = quad or self.quad
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if np.any(np.abs(z) >= 1):
            raise ValueError("evaluation points must lie in the open unit disk")
        u = np.empty(z.shape)
        dz = np.empty(z.shape, dtype=complex)
        for idx, zz in np.ndenumerate(z):
            u[idx], dz[idx] = self._potential_one(complex(zz), quad)
        return u + self.harmonic(z), dz + self.harmonic_dz(z)

    def __call__(self, z):
        return self.evaluate(z)[0]

    def doubling_error(self, z) -> float:
        u1, d1 = self.evaluate(z)
        u2, d2 = self.evaluate(z, self.quad.doubled())
        return float(max(np.abs(u1 - u2).max(), np.abs(d1 - d2).max()))


PROBE_POINTS = np.array([0.0, 1e-3, 0.05 + 0.02j, -0.3j, 0.5 * np.exp(2.1j), 0.9 * np.exp(-0.7j)])


def riesz_solve(prob: DiskProblem, quad: Quadrature | None = None, tol: float = 1e-4,
                check: bool = True) -> RieszSolution:
    """Build the Green-representation solution; raise if ring doubling disagrees."""
    sol = RieszSolution(prob, quad)
    if check:
        err = sol.doubling_error(PROBE_POINTS)
        sol.doubling = err
        if err > tol:
            raise QuadratureError(f"ring doubling disagreement {err:.3e} exceeds {tol:g}")
    return sol


def half_disk_samples(radius: float = 0.5, n_rad: int = 32, n_ang: int = 16, r_min: float = 1e-12):
    """Log-spaced polar samples of ``0 < |z| <= radius`` plus the centre (as a limit point)."""
    rr = np.geomspace(r_min * radius, radius, n_rad)
    aa = 2 * math.pi * (np.arange(n_ang) + 0.5) / n_ang
    return np.concatenate([[0.0], (rr[:, None] * np.exp(1j * aa)[None, :]).ravel()])


def _sup_F(F, n_rad=64, n_ang=64) -> float:
    rr = np.linspace(0, 1, n_rad)
    aa = 2 * math.pi * np.arange(n_ang) / n_ang
    w = rr[:, None] * np.exp(1j * aa)[None, :]
    return float(np.max(np.abs(np.asarray(F(w), dtype=float) * np.ones(w.shape))))


@dataclass
class GradientConstants:
    beta: float
    C1: float
    C2: float
    sup_grad: float
    sup_u: float
    sup_F: float


def gradient_bound_check(prob: DiskProblem, samples: Sequence[complex] | None = None,
                         quad: Quadrature | None = None) -> GradientConstants:
    """Empirical constants in ``sup |du/dz| <= C1 ||u|| + C2 ||F||`` on the half disk.

    The solution splits as ``h + v`` with ``v`` vanishing on the circle;
    ``C1 = sup|dh/dz| / ||h||`` and ``C2 = sup|dv/dz| / ||F||``.
    """
    z = half_disk_samples() if samples is None else np.asarray(samples, dtype=complex)
    sol = RieszSolution(prob, quad)
    zero = RieszSolution(DiskProblem(prob.beta, prob.F, None), quad)
    _, dv = zero.evaluate(z)
    dh = sol.harmonic_dz(z)
    circ = np.exp(2j * math.pi * np.arange(256) / 256)
    sup_h = float(np.max(np.abs(prob.boundary(circ)))) if prob.boundary is not None else 0.0
    C1 = float(np.max(np.abs(dh)) / sup_h) if sup_h > 0 else 0.0
    sF = _sup_F(prob.F)
    C2 = float(np.max(np.abs(dv)) / sF) if sF > 0 else 0.0
    u, du = sol.evaluate(np.concatenate([z, 0.95 * circ[::8]]))
    sup_u = float(max(np.abs(u).max(), sup_h))
    return GradientConstants(prob.beta, C1, C2, float(np.abs(du[: z.size]).max()), sup_u, sF)


def beta_sweep(betas: Sequence[float], F: Callable, quad: Quadrature | None = None):
    """``C2(beta)`` over ``betas`` and the log-log slope against ``2 beta - 1``."""
    c2 = np.array([gradient_bound_check(DiskProblem(b, F), quad=quad).C2 for b in betas])
    x = np.log(2 * np.asarray(betas) - 1)
    slope = float(np.polyfit(x, np.log(c2), 1)[0])
    return c2, slope


def scaled_gradient_ratio(beta: float, F: Callable, boundary: Callable | None, rho: float,
                          quad: Quadrature | None = None) -> float:
    """``sup_{|z|<=rho/2} |du/dz| / (||u||/rho + rho^(2beta-1) ||F||)`` on the disk of radius rho.

    Solved through the rescaling ``v(x) = u(rho x)``, which satisfies the
    unit-disk problem with right-hand side ``rho^(2beta) F(rho x)``.
    """
    Fs = lambda w: rho ** (2 * beta) * np.asarray(F(rho * w), dtype=float)
    bs = None if boundary is None else (lambda w: boundary(rho * w))
    sol = RieszSolution(DiskProblem(beta, Fs, bs), quad)
    x = half_disk_samples(0.5)
    vals, dv = sol.evaluate(np.concatenate([x, 0.9 * np.exp(2j * math.pi * np.arange(16) / 16)]))
    circ = np.exp(2j * math.pi * np.arange(128) / 128)
    sup_u = float(np.abs(vals).max())
    if bs is not None:
        sup_u = max(sup_u, float(np.abs(bs(circ)).max()))
    sup_grad = float(np.abs(dv[: x.size]).max()) / rho
    sup_F = _sup_F(lambda w: F(rho * w))
    return sup_grad / (sup_u / rho + rho ** (2 * beta - 1) * sup_F)


def export_csv(sol: RieszSolution, z) -> str:
    """CSV text with columns ``re, im, u, re_dudz, im_dudz``."""
    z = np.asarray(z, dtype=complex).ravel()
    u, dz = sol.evaluate(z)
    buf = io.StringIO()
    buf.write("re,im,u,re_dudz,im_dudz\n")
    for a, b, c in zip(z, u, dz):
        buf.write(",".join(format(float(x), ".17g") for x in (a.real, a.imag, b, c.real, c.imag)) + "\n")
    return buf.getvalue()
