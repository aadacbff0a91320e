import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conelab.elliptic import DirichletProblem, solve_dirichlet
from conelab.geometry import BallDomain, ConeParams, dyadic_bands, sample_pairs
from conelab.operators import GridSpec, ScalarField, apply, assemble_laplacian
from conelab.regularity import (DiniTable, ModulusData, alpha_sweep, default_ladder, dini_integrals,
                                double_cover_solve, estimate_modulus, fitted_exponent, holder_seminorm,
                                schauder_verify_elliptic, sharp_family)


def test_modulus_of_power_law():
    alpha, beta = 0.3, 0.75
    om = estimate_modulus(lambda S, R, T: R ** alpha, BallDomain.at_origin(1, 1.0), beta)
    ratio = om.omega / om.radii ** alpha
    assert np.all(ratio > 0.95) and np.all(ratio <= 1 + 1e-9)
    assert om.is_dini
    assert np.all(np.diff(om.omega) >= 0)
    assert om.doubling_violation() == 0.0


def test_modulus_of_constant_is_zero():
    om = estimate_modulus(lambda S, R, T: 0 * R + 2.0, BallDomain.at_origin(0, 1.0), 0.75)
    assert np.all(om.omega == 0)


def test_log_modulus_not_dini():
    r = default_ladder(40, 1)
    om = ModulusData.from_function(lambda x: 1 / np.log(1 / x), r)
    assert om.p0 < 0.05


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 0.9), st.floats(1e-4, 0.5), st.floats(0.55, 0.95))
def test_dini_integrals_closed_form(alpha, d, beta):
    om = ModulusData.from_function(lambda r: r ** alpha, default_ladder(30, 0))
    res = dini_integrals(om, d, beta)
    assert res.A == pytest.approx(d ** alpha / alpha, rel=1e-9)
    assert res.B == pytest.approx(d * (d ** (alpha - 1) - 1) / (1 - alpha), rel=1e-9)
    gam = 1 / beta - 1
    e = alpha - gam
    if abs(e) > 1e-6:
        assert res.C == pytest.approx(d ** gam * (1 - d ** e) / e, rel=1e-9)


def test_dini_table_interpolates():
    om = ModulusData.from_function(lambda r: r ** 0.3, default_ladder(30, 0))
    tab = DiniTable(om, 0.75)
    d = np.array([1e-3, 0.05, 0.3])
    A, B, C = tab(d)
    for k, x in enumerate(d):
        ex = dini_integrals(om, x, 0.75)
        assert A[k] == pytest.approx(ex.A, rel=1e-3)
        assert B[k] == pytest.approx(ex.B, rel=1e-3)


def test_holder_seminorm_and_exponent():
    beta = 0.6
    dom = BallDomain.at_origin(0, 0.5)
    pairs = sample_pairs(dom, 200, dyadic_bands(6, 1), beta, seed=2)
    T = lambda S, R, Th: R ** 0.4
    assert holder_seminorm(T, 0.4, pairs) <= 1 + 1e-9
    assert fitted_exponent(T, pairs) == pytest.approx(0.4, abs=0.05)


@pytest.mark.parametrize("beta,gam", [(0.75, 1 / 3), (0.6, 2 / 3)])
def test_sharp_family_solves_equation(beta, gam):
    alpha = 0.5 * min(gam, 1)
    f, u = sharp_family(alpha, beta)
    errs = []
    for n in (17, 33):
        g = GridSpec.for_ball(ConeParams(beta, 2), BallDomain.at_origin(1, 1.0), n, n, n)
        S, R, T = g.coords()
        op = assemble_laplacian(g)
        Lu = apply(op, ScalarField(g, u(S, R, T))).values
        rho = np.sqrt(S[0] ** 2 + R ** 2)
        sel = op.interior_rows.reshape(g.shape) & (rho > 0.3) & (R > 0.2)
        errs.append(np.abs(Lu - 4 * f(S, R, T))[sel].max())
    assert errs[1] < errs[0] / 3


def test_schauder_constants_bounded_for_harmonic_data():
    beta = 0.75
    g = GridSpec.for_ball(ConeParams(beta, 2), BallDomain.at_origin(1, 1.0), 33, 32, 16)
    f = lambda S, R, T: R ** 0.3
    ue = lambda S, R, T: 4 * R ** 2.3 / 2.3 ** 2 + S[0] * R ** (1 / beta) * np.cos(T)
    u, _ = solve_dirichlet(DirichletProblem(g, BallDomain.at_origin(1, 1.0), lambda S, R, T: 4 * f(S, R, T), ue))
    rep = schauder_verify_elliptic(u, f, count=100)
    assert rep.bounded1 and rep.bounded2
    assert '"variant"' in rep.to_json()


def test_alpha_sweep_validates():
    with pytest.raises(ValueError):
        alpha_sweep(0.75, [], lambda a: None)
    with pytest.raises(ValueError):
        alpha_sweep(0.75, [0.5], lambda a: None)


def test_double_cover_matches_harmonic():
    ue = lambda r, t: r ** 2 * np.cos(t)  # Re z_n at beta = 1/2 is Re w^2
    at = double_cover_solve(ue, 129)
    r = np.linspace(0.05, 0.9, 7)
    t = np.linspace(0, 2 * math.pi, 7)
    assert np.nanmax(np.abs(at(r, t) - ue(r, t))) < 2e-3
