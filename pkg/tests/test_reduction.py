import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from ricci_reduce.core_linalg import SpElement, SymplecticSpace, random_sp_element, standard_omega
from ricci_reduce.local_model import PointInvariants, build_A, model_chart
from ricci_reduce.reduction import (ChartDomainError, ReductionChart, SurfaceNotFoundError,
                                    find_surface_point, sample_points)
from ricci_reduce.ricci_identities import nabla_omega
from ricci_reduce.symmetric import PositiveLambda, canonical_element


def zero_inv(n):
    return PointInvariants(np.zeros((2 * n, 2 * n)), np.zeros(2 * n), 0.0)


def test_surface_point_zero_model():
    A = build_A(zero_inv(2))
    x0, sign = find_surface_point(A)
    assert sign == 1
    assert np.allclose(x0, np.eye(6)[0])


def test_surface_point_case1():
    A = canonical_element(PositiveLambda(2.0), 2)
    x0, sign = find_surface_point(A)
    u, v = x0[:3], x0[3:]
    assert sign == 1 and abs(-2 * 2.0 * u @ v - 1) < 1e-12


def test_surface_point_flips_sign():
    A = random_sp_element(2, 3)
    neg = SpElement(A.space, -A.matrix)
    x, s1 = find_surface_point(A)
    y, s2 = find_surface_point(neg)
    assert abs(s1 * (x @ A.space.form @ A.matrix @ x) - 1) < 1e-12
    assert abs(s2 * (y @ A.space.form @ neg.matrix @ y) - 1) < 1e-12


def test_surface_point_not_found():
    # Omega'(x, Ax) vanishes identically for A = 0
    space = SymplecticSpace.extended(2)
    A = SpElement(space, np.zeros((6, 6)))
    with pytest.raises(SurfaceNotFoundError):
        find_surface_point(A, n_random=10)


def test_scaling_of_candidate():
    from ricci_reduce.reduction import scale_to_quadric

    A = build_A(zero_inv(2))
    z = 2.0 * np.eye(6)[0]  # Omega'(z, Az) = 4
    assert np.allclose(scale_to_quadric(A, z), np.eye(6)[0])


def test_chart_base_point_and_flow(chart2):
    y0 = np.zeros(4)
    assert np.allclose(chart2.chart_point(y0), chart2.base_point)
    for t in np.linspace(-0.3, 0.3, 7):
        x = chart2.chart_point(y0, t)
        assert abs(chart2.quadric.value(x) - 1) < 1e-12
        assert np.allclose(x, scipy.linalg.expm(t * chart2.quadric.A) @ chart2.base_point)


@given(st.integers(0, 2 ** 16), st.floats(-0.2, 0.2))
@settings(max_examples=25, deadline=None)
def test_quadric_preserved(seed, t):
    chart = ReductionChart.at(random_sp_element(2, seed % 7))
    y = sample_points(chart, 1, seed)[0]
    x = chart.chart_point(y, t)
    assert abs(chart.quadric.value(x) - 1) < 1e-9


def test_outside_radius(chart2):
    y = np.zeros(4)
    y[0] = 2 * chart2.radius
    with pytest.raises(ChartDomainError):
        chart2.chart_point(y)


def test_lift_at_model_base_point(rng):
    chart = model_chart(PointInvariants.random(2, rng))
    X = rng.standard_normal(4)
    assert np.allclose(chart.horizontal_lift(np.zeros(4), X), np.concatenate([[0, 0], X]))
    assert np.allclose(chart.horizontal_lift(np.zeros(4), np.zeros(4)), 0)
    assert np.allclose(chart.reduced_form(np.zeros(4)), standard_omega(2))


def test_lift_horizontal_and_fd(chart2, y2, rng):
    X = rng.standard_normal(4)
    v = chart2.horizontal_lift(y2, X)
    x = chart2.chart_point(y2)
    om, A = chart2.quadric.form, chart2.quadric.A
    assert abs(v @ om @ x) < 1e-9 and abs(v @ om @ A @ x) < 1e-9
    assert np.allclose(chart2.push_down(y2, v), X)
    assert np.allclose(chart2.lift_matrix(y2, "fd"), chart2.lift_matrix(y2), atol=1e-8)


def test_lift_equivariance(chart2, y2, rng):
    X = rng.standard_normal(4)
    A = chart2.quadric.A
    for t in (-0.2, 0.1, 0.2):
        assert np.allclose(chart2.horizontal_lift(y2, X, t),
                           scipy.linalg.expm(t * A) @ chart2.horizontal_lift(y2, X), atol=1e-8)
        # lift at phi_t x computed from the flowed lifts, Omega' unchanged
        L = scipy.linalg.expm(t * A) @ chart2.lift_matrix(y2)
        assert np.allclose(L.T @ chart2.quadric.form @ L, chart2.reduced_form(y2), atol=1e-8)


def test_reduced_form_closed(chart2, y2):
    w = chart2.reduced_form(y2)
    assert np.array_equal(w, -w.T)
    assert abs(np.linalg.det(w)) > 1e-8
    # d omega = 0
    h = 1e-4
    d = np.zeros((4, 4, 4))
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        d[i] = (chart2.reduced_form(y2 + e) - chart2.reduced_form(y2 - e)) / (2 * h)
    cyc = d + d.transpose(1, 2, 0) + d.transpose(2, 0, 1)
    assert np.max(np.abs(cyc)) < 1e-6


def test_christoffel_zero_model():
    chart = model_chart(zero_inv(2))
    assert np.max(np.abs(chart.christoffel(np.zeros(4)))) < 1e-12
    assert np.max(np.abs(chart.christoffel(np.zeros(4), "fd"))) < 1e-8


def test_christoffel_torsion_and_paths(chart2, y2):
    G, asym = chart2.christoffel(y2, return_asymmetry=True)
    assert asym < 1e-8
    Gfd, asym_fd = chart2.christoffel(y2, "fd", return_asymmetry=True)
    assert asym_fd < 1e-8
    assert np.max(np.abs(G - Gfd)) < 1e-6


def test_nabla_omega_decays(chart2, y2):
    G = chart2.christoffel_field()
    r1 = nabla_omega(G, y2, 1e-2, richardson=False)
    r2 = nabla_omega(G, y2, 5e-3, richardson=False)
    assert r1 / r2 > 3
    assert nabla_omega(G, y2) < 1e-6


def test_prop31_trace_free_and_symmetric_f():
    n = 2
    for seed in range(3):
        chart = ReductionChart.at(random_sp_element(n, seed))
        for y in sample_points(chart, 3, seed):
            assert abs(np.trace(chart.prop31_invariants(y).rho)) < 1e-9
    k = 1.5
    chart = ReductionChart.at(canonical_element(PositiveLambda(k), n))
    for y in sample_points(chart, 3, 0):
        inv = chart.prop31_invariants(y)
        assert np.max(np.abs(inv.u)) < 1e-12
        assert abs(inv.f - 2 * (n + 1) * (2 * n + 1) * k ** 2) < 1e-9


def test_chart_validation():
    A = random_sp_element(2, 0)
    with pytest.raises(ChartDomainError):
        ReductionChart.at(A, x0=np.ones(6) * 10)
