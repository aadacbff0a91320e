import math
import warnings

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from conelab.elliptic import _system
from conelab.heat import (HeatProblem, ParabolicCascadeConfig, gradient_laplacian_bounds, li_yau_monitor,
                          li_yau_quantity, metric_grad_sq, parabolic_cascade, solve_cylinder)
from conelab.geometry import BallDomain, ConeParams, ConePoint
from conelab.operators import GridSpec, ScalarField

DOM2 = BallDomain.at_origin(0, 1.0)


def grid2(beta=0.75, n=16):
    return GridSpec.for_ball(ConeParams(beta, 1), DOM2, n_r=n, n_theta=n)


def test_stationary_harmonic_data_stays_put():
    beta = 0.75
    g = grid2(beta, 24)
    ue = lambda S, R, T: R ** (1 / beta) * np.cos(T)
    from conelab.elliptic import DirichletProblem, solve_dirichlet
    uh, _ = solve_dirichlet(DirichletProblem(g, DOM2, 0.0, ue), tol=1e-13, method="direct")
    st, rep = solve_cylinder(HeatProblem(g, DOM2, uh, ue, T=0.1, dt=0.01))
    assert np.nanmax(np.abs(st.slices[-1].values - uh.values)[uh.mask]) < 1e-11
    assert rep.max_principle_violation <= 1e-12


def test_linear_in_time_solution_exact():
    # u = t + r^2 solves u_t = Delta_beta u since L r^2 = 4; backward Euler is exact for it
    g = grid2()
    u = lambda S, R, T, t: t + R ** 2
    st, _ = solve_cylinder(HeatProblem(g, DOM2, u, u, T=0.2, dt=0.02))
    S, R, TH = g.coords()
    last = st.slices[-1]
    assert st.times[-1] == pytest.approx(0.2)
    assert np.nanmax(np.abs(last.values - u(S, R, TH, 0.2))[last.mask]) < 1e-11


def test_eigenmode_decays_at_discrete_rate():
    g = grid2(0.7, 12)
    prob = HeatProblem(g, DOM2, 0.0, 0.0, T=0.05, dt=0.01, store=[0.05])
    S_ = _system(prob.elliptic)
    d = np.sqrt(S_.w)
    Ksym = sp.diags(d) @ S_.A_ii @ sp.diags(1 / d) / 4
    lam, vec = spla.eigsh(Ksym, k=1, which="SM")
    v = vec[:, 0] / d
    u0 = np.zeros(g.size)
    u0[S_.interior] = v
    prob.initial = ScalarField(g, u0)
    st, _ = solve_cylinder(prob)
    got = st.slices[-1].values.ravel()[S_.interior]
    expect = (1 - 0.01 * lam[0]) ** -5 * v
    assert np.abs(got - expect).max() <= 1e-10 * np.abs(v).max()


def test_first_order_in_time():
    g = grid2(0.75, 12)
    u0 = lambda S, R, T: (1 - R ** 2) * (1 + R * np.cos(T))
    ref, _ = solve_cylinder(HeatProblem(g, DOM2, u0, 0.0, T=0.1, dt=0.1 / 512, store=[0.1], compat_tol=1e-3))
    errs = []
    for n in (8, 16, 32):
        st, _ = solve_cylinder(HeatProblem(g, DOM2, u0, 0.0, T=0.1, dt=0.1 / n, store=[0.1], compat_tol=1e-3))
        errs.append(np.nanmax(np.abs(st.slices[-1].values - ref.slices[-1].values)))
    slopes = -np.diff(np.log(errs)) / math.log(2)
    assert np.all(np.abs(slopes - 1) < 0.15)


def test_constant_data_and_spike_decay():
    g = grid2()
    st, rep = solve_cylinder(HeatProblem(g, DOM2, 3.0, 3.0, T=0.1))
    assert np.allclose(st.slices[-1].values[st.slices[-1].mask], 3.0, atol=1e-12)
    S, R, TH = g.coords()
    spike = np.exp(-40 * R ** 2) - math.exp(-40)
    st, rep = solve_cylinder(HeatProblem(g, DOM2, spike, 0.0, T=0.2, compat_tol=1e-6))
    sups = [np.nanmax(s.values) for s in st.slices]
    assert all(a >= b - 1e-14 for a, b in zip(sups, sups[1:]))
    assert rep.max_principle_violation <= 1e-12
    assert rep.min_value >= -1e-12


def test_li_yau_constant_and_gaussian():
    g = grid2()
    st, _ = solve_cylinder(HeatProblem(g, DOM2, 1.0, 1.0, T=0.2, store=[0.05, 0.1, 0.2]))
    rep = li_yau_monitor(st, 1.0)
    assert np.allclose(rep.sup, 0.0, atol=1e-10)
    assert rep.C == 0.0 and rep.violations == 0 and rep.dim == 2
    # Euclidean heat kernel on R^2: Q = N/t - r^2/t^2 with N = 2
    t = 0.3
    r = np.linspace(0.05, 0.9, 9)
    u = np.exp(-r ** 2 / t) / t
    ur = -2 * r / t * u
    ut = u * (r ** 2 / t ** 2 - 1 / t)
    q = li_yau_quantity(u, ur ** 2 / 4, ut)
    assert np.allclose(q, 2 / t - r ** 2 / t ** 2, atol=1e-6)


def test_li_yau_positivity_shift():
    g = grid2()
    st, _ = solve_cylinder(HeatProblem(g, DOM2, -1.0, -1.0, T=0.1))
    with pytest.raises(ValueError):
        li_yau_monitor(st, 1.0)
    rep = li_yau_monitor(st, 1.0, shift="auto")
    assert rep.shift > 0
    assert np.all(np.isfinite(rep.sup))


def test_metric_gradient_matches_chart():
    g = grid2()
    S, R, TH = g.coords()
    gs = metric_grad_sq(ScalarField(g, R.copy()))
    assert np.allclose(gs[2:-2], 0.25, atol=1e-12)


def test_gradient_laplacian_bounds():
    beta = 0.75
    g = grid2(beta, 24)
    u0 = lambda S, R, T: (1 - R ** 2) * (1 + 0.5 * R ** (1 / beta) * np.cos(T))
    st, _ = solve_cylinder(HeatProblem(g, DOM2, u0, 0.0, T=1.0, compat_tol=1e-6))
    vals = {}
    for R in (1.0, 0.5):
        b = gradient_laplacian_bounds(st, R, (0.05, 1.0))
        assert len(b["times"]) > 0
        vals[R] = max(b["grad"]), max(b["ut"])
        assert np.all(np.isfinite(b["grad"])) and np.all(np.isfinite(b["ut"]))
    assert vals[0.5][0] <= 4 * vals[1.0][0] + 1e-12 and vals[1.0][0] <= 4 * vals[0.5][0] + 1e-12


def test_harmonic_stationary_has_zero_time_derivative():
    beta = 0.75
    g = grid2(beta, 16)
    from conelab.elliptic import DirichletProblem, solve_dirichlet
    ue = lambda S, R, T: R ** (1 / beta) * np.cos(T)
    uh, _ = solve_dirichlet(DirichletProblem(g, DOM2, 0.0, ue), tol=1e-13, method="direct")
    st, _ = solve_cylinder(HeatProblem(g, DOM2, uh, ue, T=0.2))
    b = gradient_laplacian_bounds(st, 1.0, (0.05, 0.2))
    assert max(b["ut"]) < 1e-9


def test_corner_incompatibility_warns():
    g = grid2()
    with pytest.warns(UserWarning):
        solve_cylinder(HeatProblem(g, DOM2, 1.0, 0.0, T=0.01))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        solve_cylinder(HeatProblem(g, DOM2, 0.0, 0.0, T=0.01))


def test_parabolic_cascade_depth_two():
    P = ConeParams(0.75, 2)
    f = lambda S, R, T: R ** 0.3
    ref = lambda S, R, T: -4 * R ** 2.3 / 2.3 ** 2
    cfg = ParabolicCascadeConfig(ConePoint((0.0,), 2.0 ** -20, 0.0, P), 1.0, P, f, ref, depth=2,
                                 nodes=(9, 8, 8), steps=4)
    rep = parabolic_cascade(cfg)
    assert len(rep.records) == 1 and rep.records[0].sup_err >= 0
