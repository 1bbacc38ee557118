import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from seeker.averaging import g_bar
from seeker.dynamics import (
    BoundedSignal,
    DisturbanceTriple,
    UnicycleState,
    VehicleParams,
    averaged_rhs,
    closed_loop_rhs,
    control,
    measure,
    open_loop_rhs,
)
from seeker.field import ScalarField, evaluate, ring_field

positive = st.floats(0.05, 5.0)


def test_params_validation_and_derived():
    vp = VehicleParams(kappa=2.0, tau_star=3.0, eps=0.05, m=2.0, k=0.5, J=4.0)
    assert vp.omega_star == 1.5
    assert vp.fast_time_constant == max(0.05 * 2.0 / 0.5, 4.0 / 2.0)
    assert vp.drift_gain == pytest.approx(0.05 * 1.0 * 0.2 / (2 * 0.5))
    assert vp.with_(r=0.1).r == 0.1
    for bad in (0.0, -1.0, float("inf"), float("nan")):
        with pytest.raises(ValueError):
            VehicleParams(m=bad)


def test_state_orientation_must_be_unit():
    with pytest.raises(ValueError):
        UnicycleState((0, 0), (1.0, 1.0))
    s = UnicycleState((1, 2), (0.6, 0.8), 0.1, 0.2, 0.3)
    assert UnicycleState.from_array(s.as_array()) == s


def test_signals_and_norms():
    assert BoundedSignal.zero()(3.0) == 0.0
    assert BoundedSignal.constant(-0.3)(7.0) == -0.3
    assert BoundedSignal.constant(-0.3).norm == 0.3
    s = BoundedSignal.sinusoid(0.05, 2.0, 0.5)
    assert s(1.0) == pytest.approx(0.05 * math.sin(2.5))
    d = DisturbanceTriple(s, BoundedSignal.zero(), BoundedSignal.noise(0.02, seed=4))
    assert d.norms == (0.05, 0.0, 0.02)
    assert not d.is_zero
    assert DisturbanceTriple().is_zero


def test_noise_is_seeded_piecewise_constant_and_bounded():
    a = BoundedSignal.noise(0.02, dwell=0.1, seed=7)
    b = BoundedSignal.noise(0.02, dwell=0.1, seed=7)
    t = np.linspace(0, 50, 2001)
    va = np.array([a(x) for x in t])
    assert np.array_equal(va, [b(x) for x in t])
    assert np.all(np.abs(va) <= 0.02)
    assert a(0.31) == a(0.39)
    assert a(-1.0) == a(0.0)
    assert not np.array_equal(va, [BoundedSignal.noise(0.02, seed=8)(x) for x in t])


def test_noise_table_prefix_stable():
    s = BoundedSignal.noise(1.0, seed=3)
    short = s.noise_table(10).copy()
    long = BoundedSignal.noise(1.0, seed=3).noise_table(5000)
    assert np.array_equal(short, long[:10])


def test_signal_dict_round_trip():
    for s in (BoundedSignal.zero(), BoundedSignal.constant(0.1), BoundedSignal.sinusoid(0.05, 1.3, 0.2),
              BoundedSignal.noise(0.02, 0.2, 11)):
        assert BoundedSignal.from_dict(s.to_dict()) == s
    assert BoundedSignal.from_dict({"kind": "noise", "amplitude": 0.1}, default_seed=5).seed == 5
    with pytest.raises(KeyError):
        BoundedSignal.from_dict({"kind": "sinusoid", "amplitude": 1.0, "omega": 2.0})


def test_closed_loop_rhs_by_hand():
    f = ScalarField.linear((1.0, 2.0), 0.5)
    vp = VehicleParams(m=2.0, J=3.0, k=0.5, kappa=1.5, eps=0.1, lam=0.7, tau_star=0.9, h=1.1, r=0.3)
    x = np.array([1.0, -1.0, 0.6, 0.8, 0.4, 0.2, -0.3])
    d = DisturbanceTriple(BoundedSignal.constant(0.01), BoundedSignal.constant(0.02), BoundedSignal.constant(0.03))
    y = (1.0 + 0.3 * 0.6) + 2.0 * (-1.0 + 0.3 * 0.8) + 0.5 + 0.02
    expect = [
        0.4 * 0.6,
        0.4 * 0.8,
        -0.2 * 0.8,
        0.2 * 0.6,
        (-(0.5 / 0.1) * 0.4 - 0.7 * (y + 0.3) + 0.03) / 2.0,
        (-1.5 * 0.2 + 0.9 + 0.01) / 3.0,
        0.1 * 1.1 * (y + 0.3),
    ]
    np.testing.assert_allclose(closed_loop_rhs(0.0, x, f, d, vp), expect, rtol=1e-14, atol=1e-15)
    assert measure(f, x, 0.0, vp, d.d_s) == pytest.approx(y)
    assert control(y, -0.3, vp) == (pytest.approx(-0.7 * (y + 0.3)), 0.9)


@given(a=st.floats(0, 2 * math.pi), v=st.floats(-2, 2), w=st.floats(-2, 2))
def test_heading_derivative_is_tangent(a, v, w):
    x = np.array([0.0, 0.0, math.cos(a), math.sin(a), v, w, 0.0])
    dx = open_loop_rhs(0.0, x, 0.0, 0.0, DisturbanceTriple(), VehicleParams())
    assert abs(dx[2] * x[2] + dx[3] * x[3]) < 1e-15
    np.testing.assert_allclose(dx[0:2], v * x[2:4], atol=1e-15)
    assert dx[6] == 0.0


@given(p1=st.floats(-4, 4), p2=st.floats(-4, 4), eps=positive, lam=positive, r=st.floats(0.05, 1.0))
def test_averaged_rhs_is_scaled_boundary_field(p1, p2, eps, lam, r):
    vp = VehicleParams(eps=eps, lam=lam, r=r)
    f = ring_field()
    got = averaged_rhs(0.0, (p1, p2), f, None, vp)
    np.testing.assert_allclose(got, -eps * lam * r / 2 * g_bar(f, (p1, p2), r), rtol=1e-12, atol=1e-14)
    shifted = averaged_rhs(0.0, (p1, p2), f, lambda t: (1.0, -1.0), vp)
    np.testing.assert_allclose(shifted - got, [eps, -eps], atol=1e-14)


def test_measure_uses_sensor_offset():
    f = ring_field()
    vp = VehicleParams(r=0.25)
    x = UnicycleState((-2.0, 0.5), (0.0, 1.0))
    assert measure(f, x, 0.0, vp) == evaluate(f, (-2.0, 0.75))
