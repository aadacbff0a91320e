import math

import numpy as np
import pytest

from conelab.geometry import ParameterError, make_rng
from conelab.poisson1d import (DiskProblem, QuadratureError, Quadrature, export_csv, gradient_bound_check,
                               green_kernel, half_disk_samples, riesz_solve, scaled_gradient_ratio)

Z = np.array([0.0, 1e-6, 0.1 + 0.05j, -0.4j, 0.7 * np.exp(2.2j), 0.95])


def test_green_kernel_properties():
    w = np.array([0.3 + 0.1j, -0.5j])
    assert np.allclose(green_kernel(0.0, w), np.log(np.abs(w)) / (2 * math.pi), atol=1e-15)
    assert abs(green_kernel(0.2, 0.999999)) < 1e-5
    rng = make_rng(11)
    a = np.sqrt(rng.random(1000)) * np.exp(2j * math.pi * rng.random(1000)) * 0.99
    b = np.sqrt(rng.random(1000)) * np.exp(2j * math.pi * rng.random(1000)) * 0.99
    assert np.allclose(green_kernel(a, b), green_kernel(b, a), atol=1e-13)
    assert np.all(green_kernel(a, b) < 0)
    with pytest.raises(ZeroDivisionError):
        green_kernel(0.3, 0.3)


def test_beta_range():
    with pytest.raises(ParameterError):
        DiskProblem(0.5, lambda w: 0 * w)


def test_harmonic_extension():
    sol = riesz_solve(DiskProblem(0.75, lambda w: 0 * np.abs(w), lambda w: np.real(w)))
    assert np.allclose(sol(Z), np.real(Z), atol=1e-10)


@pytest.mark.parametrize("beta", [0.55, 0.75, 0.9])
def test_constant_rhs_closed_form(beta):
    sol = riesz_solve(DiskProblem(beta, lambda w: beta ** 2 + 0 * np.abs(w), lambda w: np.abs(w) ** (2 * beta)))
    assert np.allclose(sol(Z), np.abs(Z) ** (2 * beta), atol=1e-9)


def test_power_rhs_matches_radial_ode():
    beta, alpha = 0.75, 0.3
    # F = d^alpha with d = |w|^beta; u = |w|^(beta (alpha + 2)) / (alpha + 2)^2 times beta^2 / ... from L u = 4F/beta^2
    c = 4 / beta ** 2 / (alpha + 2) ** 2 * beta ** 2 / 4
    F = lambda w: np.abs(w) ** (beta * alpha)
    ue = lambda w: 4 * c / beta ** 2 * np.abs(w) ** (beta * (alpha + 2))
    sol = riesz_solve(DiskProblem(beta, F, lambda w: ue(w)))
    assert np.allclose(sol(Z), ue(Z), atol=1e-9)


def test_angular_rhs_closed_form():
    beta = 0.7
    F = lambda w: np.cos(np.angle(w))
    c = 4 / (4 * beta ** 2 - 1)
    ue = lambda w: c * (np.abs(w) ** (2 * beta) - np.abs(w)) * np.cos(np.angle(w))
    sol = riesz_solve(DiskProblem(beta, F))
    assert np.allclose(sol(Z[1:]), ue(Z[1:]), atol=1e-9)
    _, du = sol.evaluate(np.array([0.0]))
    assert du[0] == pytest.approx(-2 / (4 * beta ** 2 - 1), abs=1e-8)


def test_doubling_diagnostic_and_coarse_failure():
    prob = DiskProblem(0.75, lambda w: np.cos(3 * np.angle(w)) + np.abs(w))
    sol = riesz_solve(prob)
    assert sol.doubling <= 1e-4
    with pytest.raises(QuadratureError):
        riesz_solve(prob, Quadrature(1, 2, 0.5, 4, 8), tol=1e-12)


def test_boundary_data_attained():
    beta = 0.8
    g = lambda w: np.real(w ** 3) + 1
    sol = riesz_solve(DiskProblem(beta, lambda w: np.cos(np.angle(w)), g))
    ang = np.exp(2j * math.pi * np.arange(16) / 16)
    errs = [np.abs(sol(rho * ang) - g(ang)).max() for rho in (0.9, 0.99, 0.999)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[-1] < 1e-2


def test_gradient_constants():
    c = gradient_bound_check(DiskProblem(0.75, lambda w: 0 * np.abs(w), lambda w: np.real(w)))
    assert c.C2 == 0.0 and 0 < c.C1 < 10
    c = gradient_bound_check(DiskProblem(0.75, lambda w: np.cos(np.angle(w))))
    assert c.C1 == 0.0 and c.C2 > 0


def test_scaling_form():
    F = lambda w: np.cos(np.angle(w))
    ratios = [scaled_gradient_ratio(0.75, F, lambda w: np.real(w), rho) for rho in (1.0, 0.5, 0.25)]
    assert max(ratios) / min(ratios) <= 2


def test_half_disk_samples_and_csv():
    z = half_disk_samples(0.5, 8, 4)
    assert z[0] == 0 and np.all(np.abs(z) <= 0.5 + 1e-15)
    sol = riesz_solve(DiskProblem(0.75, lambda w: 0 * np.abs(w), lambda w: np.real(w)))
    text = export_csv(sol, z[:3])
    assert text.splitlines()[0] == "re,im,u,re_dudz,im_dudz"
    assert len(text.splitlines()) == 4
