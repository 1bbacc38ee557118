import numpy as np
import pytest
from hypothesis import given, strategies as st

from seeker.averaging import (
    VERIFY_QUADRATURE,
    QuadratureSpec,
    g_bar,
    g_bar_1d,
    g_tilde,
    phi_avg_1d,
    psi_avg,
    rotate,
    time_average_g_tilde,
)
from seeker.field import ScalarField, ScalarField1D, evaluate, grad_fd, ring_field

coord = st.floats(-4, 4, allow_nan=False)
radius = st.floats(0.01, 3.0)
angle = st.floats(0, 2 * np.pi)


def monte_carlo_disk_average(field, p, r, n=10_000_000, seed=0, chunk=1_000_000):
    """Uniform-disk sample mean and its standard error."""
    rng = np.random.default_rng(seed)
    total = total_sq = 0.0
    for _ in range(n // chunk):
        rho = r * np.sqrt(rng.random(chunk))
        th = 2 * np.pi * rng.random(chunk)
        vals = evaluate(field, np.column_stack([p[0] + rho * np.cos(th), p[1] + rho * np.sin(th)]))
        total += vals.sum()
        total_sq += (vals**2).sum()
    mean = total / n
    return mean, np.sqrt((total_sq / n - mean**2) / n)


@given(p1=coord, p2=coord, r=radius)
def test_quadratic_closed_form(p1, p2, r):
    f = ScalarField.quadratic()
    assert psi_avg(f, (p1, p2), r) == pytest.approx(p1 * p1 + p2 * p2 + r * r / 2, abs=1e-10)
    np.testing.assert_allclose(g_bar(f, (p1, p2), r), [2 * p1, 2 * p2], atol=1e-10)


@given(p1=coord, p2=coord, r=radius)
def test_linear_field_is_its_own_average(p1, p2, r):
    f = ScalarField.linear((0.4, -1.1), 2.0)
    assert psi_avg(f, (p1, p2), r) == pytest.approx(evaluate(f, (p1, p2)), abs=1e-12)
    np.testing.assert_allclose(g_bar(f, (p1, p2), r), [0.4, -1.1], atol=1e-12)


def test_constant_field_has_zero_boundary_field():
    f = ScalarField.constant(-3.0)
    assert psi_avg(f, (1, 2), 0.5) == pytest.approx(-3.0, abs=1e-14)
    np.testing.assert_allclose(g_bar(f, (1, 2), 0.5), 0.0, atol=1e-13)


def test_ring_average_matches_monte_carlo_at_start():
    f = ring_field()
    mean, se = monte_carlo_disk_average(f, (-4.0, 0.0), 0.2)
    assert abs(psi_avg(f, (-4.0, 0.0), 0.2, VERIFY_QUADRATURE) - mean) < 5 * se + 1e-12


def test_averaging_fills_ring_dip():
    f = ring_field()
    mean, se = monte_carlo_disk_average(f, (-2.0, 0.0), 0.2, n=2_000_000, seed=1)
    quad = psi_avg(f, (-2.0, 0.0), 0.2, VERIFY_QUADRATURE)
    assert abs(quad - mean) < 5 * se
    assert quad > evaluate(f, (-2.0, 0.0))


def test_divergence_identity_small_grid():
    f = ring_field()
    pts = np.column_stack([np.linspace(-3, 3, 9), np.linspace(2, -2, 9)])
    for r in (0.1, 0.5):
        fd = grad_fd(lambda q: psi_avg(f, q, r, VERIFY_QUADRATURE), pts)
        np.testing.assert_allclose(g_bar(f, pts, r, VERIFY_QUADRATURE), fd, atol=1e-6)


def test_psi_avg_vectorizes():
    f = ring_field()
    pts = np.random.default_rng(2).uniform(-3, 3, (3, 4, 2))
    out = psi_avg(f, pts, 0.2)
    assert out.shape == (3, 4)
    assert out[1, 2] == pytest.approx(psi_avg(f, pts[1, 2], 0.2), rel=1e-14)
    assert g_bar(f, pts, 0.2).shape == (3, 4, 2)


def test_radius_and_quadrature_validation():
    with pytest.raises(ValueError):
        psi_avg(ring_field(), (0, 0), 0.0)
    with pytest.raises(ValueError):
        QuadratureSpec(7, 16)
    with pytest.raises(ValueError):
        QuadratureSpec(64, 2)


@given(th=angle, a=angle)
def test_rotation_preserves_length_and_composes(th, a):
    o = np.array([np.cos(a), np.sin(a)])
    e = rotate(th, o)
    assert np.hypot(*e) == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(rotate(-th, e), o, atol=1e-14)


def test_g_tilde_rejects_non_unit_orientation():
    with pytest.raises(ValueError):
        g_tilde(ring_field(), 0.0, (0, 0), (1.0, 0.1), 0.0, 0.2, 1.0)
    with pytest.raises(ValueError):
        g_tilde(ring_field(), 0.0, (0, 0), (1.0, 0.0), 0.0, 0.2, 0.0)


def test_g_tilde_value():
    f = ScalarField.linear((1.0, 0.0), 0.0)
    # e = (0, 1) at t = pi/2 with omega* = 1, sensor at (0, 0.2)
    np.testing.assert_allclose(g_tilde(f, np.pi / 2, (0, 0), (1, 0), 0.5, 0.2, 1.0), [0.0, -5.0], atol=1e-12)


@given(p1=st.floats(-3, 3), p2=st.floats(-3, 3), r=st.floats(0.05, 1.0), a=angle, b=angle,
       e1=st.floats(-3, 3), e2=st.floats(-3, 3), w=st.floats(0.2, 3.0))
def test_time_average_identity(p1, p2, r, a, b, e1, e2, w):
    f = ring_field()
    m1 = time_average_g_tilde(f, (p1, p2), (np.cos(a), np.sin(a)), e1, r, w)
    m2 = time_average_g_tilde(f, (p1, p2), (np.cos(b), np.sin(b)), e2, r, w)
    np.testing.assert_allclose(m1, g_bar(f, (p1, p2), r, VERIFY_QUADRATURE), atol=1e-8)
    np.testing.assert_allclose(m1, m2, atol=1e-10)


@given(th=st.floats(-3, 3), a=st.floats(0.01, 3))
def test_one_dimensional_closed_forms(th, a):
    phi = ScalarField1D.polynomial([0.0, 0.0, 1.0])
    assert phi_avg_1d(phi, th, a) == pytest.approx(th * th + a * a / 4, abs=1e-10)
    assert g_bar_1d(phi, th, a) == pytest.approx(2 * th, abs=1e-10)


@given(th=st.floats(-3, 3), a=st.floats(0.05, 1.5))
def test_one_dimensional_identity_gaussian(th, a):
    phi = ScalarField1D.gaussian_mixture([-1.0, 0.4], [0.0, 1.5], [0.7, 0.3])
    h = 1e-5
    fd = (phi_avg_1d(phi, th + h, a) - phi_avg_1d(phi, th - h, a)) / (2 * h)
    assert g_bar_1d(phi, th, a) == pytest.approx(fd, abs=1e-6)
