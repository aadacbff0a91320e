import json

import numpy as np
import pytest

from conelab.acceptance import a4_config
from conelab.cascade import CascadeConfig, cascade_ball, mixed_modulus_probe, run_cascade, scale_index
from conelab.geometry import ConeParams, ConePoint, ParameterError

P = ConeParams(0.75, 2)


def test_scale_index():
    assert scale_index(ConePoint((0.0,), 0.3, 0.0, P)) == 2
    assert scale_index(ConePoint((0.0,), 0.25, 0.0, P)) == 3
    assert scale_index(ConePoint((0.0,), 2.0 ** -20, 0.0, P)) == 21
    with pytest.raises(ParameterError):
        scale_index(ConePoint((0.0,), 0.0, 0.0, P))
    with pytest.raises(ParameterError):
        scale_index(ConePoint((0.0,), 0.3, 0.0, P), tau=1.5)


def test_config_validation():
    f = lambda S, R, T: 0 * R
    with pytest.raises(ParameterError):
        CascadeConfig(ConePoint((0.0,), 0.0, 0.0, P), P, f, f)
    with pytest.raises(ParameterError):
        CascadeConfig(ConePoint((0.0,), 0.1, 0.0, P), P, f, f, depth=1)
    with pytest.raises(ParameterError):
        CascadeConfig(ConePoint((0.0,), 0.1, 0.0, P), P, f, f, tau=0.0)


def test_balls_nest_and_centre():
    p = ConePoint((0.0,), 2.0 ** -20, 0.0, P)
    kp = scale_index(p)
    b2, b3 = cascade_ball(p, 2, kp, 0.5), cascade_ball(p, 3, kp, 0.5)
    # off-point balls centred on the axis carry radius 2 tau^k so they cover B_{tau^k}(p)
    assert b2.radius == 0.5 and b3.radius == 0.25
    assert b2.center_r == 0.0


def test_depth_two_gives_single_record():
    cfg = a4_config()
    cfg.depth = 2
    cfg.nodes = (9, 8, 8)
    rep = run_cascade(cfg)
    assert len(rep.records) == 1 and rep.records[0].diff == {}
    json.loads(rep.to_json())


def test_small_cascade_converges_at_power():
    cfg = a4_config()
    cfg.depth = 4
    cfg.nodes = (17, 16, 8)
    rep = run_cascade(cfg)
    assert len(rep.records) == 3
    assert all(r.sup_err > 0 for r in rep.records)
    assert rep.exponent == pytest.approx(2.3, abs=0.3)
    assert rep.ratios("second_ratio").size == 2


def test_mixed_probe_degenerate_for_constant():
    pr = mixed_modulus_probe(lambda S, R, T: 0 * R + 1.0, 0.75)
    assert pr.degenerate and np.isnan(pr.exponent)


def test_mixed_probe_exponent():
    beta = 0.75
    pr = mixed_modulus_probe(lambda S, R, T: R ** (1 / beta - 1) * np.cos(T), beta, count=150)
    assert not pr.degenerate
    assert pr.exponent == pytest.approx(1 / beta - 1, abs=0.05)
