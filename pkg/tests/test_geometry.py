import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conelab.geometry import (BallDomain, ConeParams, ConePoint, ParabolicPoint, ParameterError,
                              cone_distance, cone_distance_arrays, distance_to_origin,
                              distance_to_singular_set, dyadic_bands, geodesic_path, in_ball,
                              make_rng, parabolic_distance, refine_pairs, sample_pairs)

P2 = ConeParams(0.75, 2)


def test_distance_to_origin_examples():
    assert distance_to_origin(ConePoint((0.0, 0.0), 0.0, 0.0, ConeParams(0.75, 2))) == 0.0
    p = ConePoint((0.3, 0.0), 0.4, 1.1, ConeParams(0.75, 3))
    assert distance_to_origin(p) == pytest.approx(0.5, abs=1e-15)
    assert distance_to_origin(ConePoint((), 1.0, math.pi, ConeParams(0.6, 1))) == 1.0


def test_cone_distance_examples():
    P1 = ConeParams(1.0, 1)
    a, b = ConePoint((), 1.0, 0.0, P1), ConePoint((), 1.0, math.pi, P1)
    assert cone_distance(a, b) == pytest.approx(2.0, abs=1e-14)
    P = ConeParams(0.75, 1)
    a, b = ConePoint((), 1.0, 0.0, P), ConePoint((), 1.0, math.pi, P)
    d = cone_distance(a, b)
    assert d == pytest.approx(math.sqrt(2 - 2 * math.cos(0.75 * math.pi)), abs=1e-14)
    assert d == pytest.approx(1.84776, abs=1e-5)
    assert cone_distance(a, a) == 0.0
    assert not in_ball(b, a, 1.8)


def test_cone_distance_matches_discretized_path_length():
    """Unrolled-cone law of cosines against a brute-force shortest path over the chart."""
    beta = 0.75
    from scipy.optimize import minimize

    n = 40

    def length(x):
        r = np.concatenate([[1.0], np.abs(x[:n]), [1.0]])
        th = np.concatenate([[0.0], x[n:], [math.pi]])
        dr, dth = np.diff(r), np.diff(th)
        rm = 0.5 * (r[1:] + r[:-1])
        return np.sum(np.sqrt(dr ** 2 + (beta * rm * dth) ** 2))

    t = np.linspace(0, 1, n + 2)[1:-1]
    x0 = np.concatenate([1 - 0.5 * np.sin(math.pi * t), math.pi * t])
    res = minimize(length, x0, method="L-BFGS-B")
    assert res.fun == pytest.approx(1.84776, rel=2e-3)


def test_mismatched_params_raise():
    a = ConePoint((), 1.0, 0.0, ConeParams(0.75, 1))
    b = ConePoint((), 1.0, 0.0, ConeParams(0.6, 1))
    with pytest.raises(ParameterError):
        cone_distance(a, b)


def test_singular_set_distance():
    P = ConeParams(0.75, 3)
    assert distance_to_singular_set(ConePoint((5.0, 5.0), 0.2, 0.0, P)) == 0.2
    assert distance_to_singular_set(ConePoint((5.0, 5.0), 0.0, 0.0, P)) == 0.0
    p = ConePoint.from_complex((), 0.09, 0.5)
    assert distance_to_singular_set(p) == pytest.approx(0.3, abs=1e-15)


def test_parabolic_distance_examples():
    P = ConeParams(0.75, 1)
    x = ConePoint((), 0.5, 0.0, P)
    o = ConePoint((), 0.0, 0.0, P)
    assert parabolic_distance(ParabolicPoint(x, 0.0), ParabolicPoint(x, 0.0)) == 0.0
    assert parabolic_distance(ParabolicPoint(x, 0.0), ParabolicPoint(x, 0.04)) == pytest.approx(0.2)
    assert parabolic_distance(ParabolicPoint(x, 0.0), ParabolicPoint(o, 0.09)) == pytest.approx(0.5)


def test_in_ball_open():
    P = ConeParams(0.75, 2)
    o = ConePoint((0.0,), 0.0, 0.0, P)
    assert in_ball(ConePoint((0.3,), 0.4, 0.0, P), o, 1.0)
    assert not in_ball(ConePoint((0.6,), 0.8, 0.0, P), o, 1.0)


def _triples(rng, beta, count):
    s = rng.uniform(-1, 1, size=(3, 1, count))
    r = rng.uniform(0, 1, size=(3, count)) ** 2
    th = rng.uniform(0, 2 * math.pi, size=(3, count))
    return s, r, th


def test_triangle_inequality_statistical():
    rng = make_rng(7)
    for beta in (0.3, 0.75, 1.0):
        s, r, th = _triples(rng, beta, 100_000)
        d = lambda i, j: cone_distance_arrays(s[i], r[i], th[i], s[j], r[j], th[j], beta)
        assert np.all(d(0, 1) <= d(0, 2) + d(2, 1) + 1e-12)


def test_beta_one_is_euclidean():
    rng = make_rng(3)
    s, r, th = _triples(rng, 1.0, 10_000)
    d = cone_distance_arrays(s[0], r[0], th[0], s[1], r[1], th[1], 1.0)
    x = lambda i: np.stack([s[i][0], r[i] * np.cos(th[i]), r[i] * np.sin(th[i])])
    assert np.allclose(d, np.linalg.norm(x(0) - x(1), axis=0), atol=1e-12)


def test_distance_to_origin_consistent():
    P = ConeParams(0.6, 2)
    p = ConePoint((0.2,), 0.7, 2.0, P)
    assert distance_to_origin(p) == cone_distance(p, ConePoint((0.0,), 0.0, 0.0, P))


def test_axis_points_identified():
    P = ConeParams(0.6, 1)
    assert ConePoint((), 0.0, 0.0, P) == ConePoint((), 0.0, 1.3, P)
    q = ConePoint((), 0.4, 0.2, P)
    assert cone_distance(ConePoint((), 0.0, 0.0, P), q) == cone_distance(ConePoint((), 0.0, 2.0, P), q)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.2, 1.0), st.floats(1e-3, 1), st.floats(1e-3, 1), st.floats(0, 2 * math.pi),
       st.floats(0, 2 * math.pi))
def test_distance_symmetric_and_bounded(beta, r1, r2, t1, t2):
    P = ConeParams(beta, 1)
    a, b = ConePoint((), r1, t1, P), ConePoint((), r2, t2, P)
    d = cone_distance(a, b)
    assert d == pytest.approx(cone_distance(b, a), abs=1e-14)
    assert abs(r1 - r2) - 1e-12 <= d <= r1 + r2 + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(0.3, 0.95), st.floats(0.05, 1), st.floats(0.05, 1), st.floats(0, 2 * math.pi))
def test_geodesics_avoid_singular_set(beta, r1, r2, dth):
    P = ConeParams(beta, 1)
    a, b = ConePoint((), r1, 0.0, P), ConePoint((), r2, dth, P)
    if min(beta * dth, 2 * math.pi * beta - beta * dth) >= math.pi - 1e-6:
        return
    s, r, th = geodesic_path(a, b, beta)
    assert np.all(r > 0)


def test_sample_pairs_contract():
    dom = BallDomain.at_origin(1, 1.0)
    bands = dyadic_bands(6, 1)
    assert sample_pairs(dom, 0, bands, 0.75) == []
    sets = sample_pairs(dom, 200, bands, 0.75, seed=4)
    again = sample_pairs(dom, 200, bands, 0.75, seed=4)
    for (lo, hi), ps, qs in zip(bands, sets, again):
        assert len(ps) > 0
        assert np.all((ps.d >= lo) & (ps.d < hi))
        assert np.all(dom.contains(ps.s1, ps.r1, ps.th1, 0.75))
        assert np.all(dom.contains(ps.s2, ps.r2, ps.th2, 0.75))
        assert np.all(ps.r1 > 0) and np.all(ps.r2 > 0)
        assert np.array_equal(ps.d, qs.d)


def test_refine_pairs_only_adds_valid_pairs():
    dom = BallDomain.at_origin(0, 1.0)
    band = (2 ** -4, 2 ** -3)
    ps = sample_pairs(dom, 100, [band], 0.6, seed=1)[0]
    obj = lambda p: np.abs(p.r1 ** 0.3 - p.r2 ** 0.3)
    ref = refine_pairs(ps, obj, dom, 0.6, seed=1)
    assert len(ref) >= len(ps)
    assert obj(ref).max() >= obj(ps).max()
    assert np.all((ref.d >= band[0]) & (ref.d < band[1]))
