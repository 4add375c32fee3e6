import numpy as np
import pytest

from ricci_reduce.curvature import curvature_fd
from ricci_reduce.reduction import ChristoffelField, ReductionChart, find_surface_point, sample_points
from ricci_reduce.ricci_identities import (check_cyclic_nabla_r, check_K, extract_f, extract_u,
                                           nabla_omega, reconstruct_curvature,
                                           rho_field_from_curvature)
from ricci_reduce.symmetric import PositiveLambda, canonical_element


def test_eq1_on_reduction(chart2, y2):
    G = chart2.christoffel_field()
    R = curvature_fd(G, y2)
    rho = chart2.prop31_invariants(y2).rho
    assert np.max(np.abs(reconstruct_curvature(rho, chart2.reduced_form(y2)) - R)) < 1e-6


def test_u_and_f_match_closed_form(chart2, y2):
    G = chart2.christoffel_field()
    inv = chart2.prop31_invariants(y2)
    u, fit = extract_u(G, rho_field_from_curvature(G), y2)
    assert fit < 1e-6
    assert np.max(np.abs(u - inv.u)) < 1e-5
    f, fres = extract_f(G, inv.rho, lambda y: chart2.prop31_invariants(y).u, y2)
    assert abs(f - inv.f) < 1e-5 and fres < 1e-5


def test_K_constant(chart3):
    samples = []
    for y in sample_points(chart3, 6, 3):
        inv = chart3.prop31_invariants(y)
        samples.append((inv.rho, inv.f))
    _, spread = check_K(samples)
    assert spread < 1e-8


def test_K_needs_two_samples():
    with pytest.raises(ValueError):
        check_K([(np.zeros((2, 2)), 0.0)])


def test_cyclic(chart2, y2):
    assert check_cyclic_nabla_r(chart2.christoffel_field(), y2) < 1e-5
    assert check_cyclic_nabla_r(ChristoffelField.flat(4), np.zeros(4)) == 0
    assert check_cyclic_nabla_r(chart2.christoffel_field().perturbed(), y2) > 1e-3


def test_nabla_omega(chart2, y2):
    assert nabla_omega(chart2.christoffel_field(), y2) < 1e-6


def test_symmetric_generator_has_no_u():
    n, k = 2, 0.7
    A = canonical_element(PositiveLambda(k), n)
    x0, _ = find_surface_point(A)
    chart = ReductionChart.at(A, x0=x0)
    for y in sample_points(chart, 3, 0):
        inv = chart.prop31_invariants(y)
        assert np.max(np.abs(inv.u)) < 1e-8
        assert abs(inv.f - 2 * (n + 1) * (2 * n + 1) * k ** 2) < 1e-8
