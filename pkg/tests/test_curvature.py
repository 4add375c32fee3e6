import numpy as np
import pytest

from ricci_reduce.core_linalg import standard_omega
from ricci_reduce.curvature import (DimensionTooSmall, E_part, curvature_data, curvature_fd,
                                    decompose, is_ricci_type, lower_curvature, raise_curvature,
                                    ricci)
from ricci_reduce.frame_link import darboux_frame
from ricci_reduce.reduction import ChristoffelField, sample_points
from ricci_reduce.ricci_identities import reconstruct_curvature


def random_sym(rng, d):
    S = rng.standard_normal((d, d))
    return S + S.T


def test_flat():
    G = ChristoffelField.flat(4)
    R = curvature_fd(G, np.zeros(4))
    assert np.max(np.abs(R)) == 0
    r, rho = ricci(R, standard_omega(2))
    assert np.max(np.abs(r)) == 0 and np.max(np.abs(rho)) == 0
    E, W = decompose(lower_curvature(R, standard_omega(2)), standard_omega(2), r)
    assert np.max(np.abs(E)) == 0 and np.max(np.abs(W)) == 0
    assert is_ricci_type(G, [np.zeros(4)])[0]


def test_ricci_of_E_index_loop(rng):
    om = standard_omega(2)
    r = random_sym(rng, 4)
    R = raise_curvature(E_part(om, r), om)
    # brute-force trace r_ij = sum_k R^k_{j i k}
    brute = np.zeros((4, 4))
    for i in range(4):
        for j in range(4):
            brute[i, j] = sum(R[k, j, i, k] for k in range(4))
    assert np.allclose(ricci(R, om)[0], brute)
    assert np.max(np.abs(brute - r)) < 1e-9
    _, W = decompose(E_part(om, r), om, r)
    assert np.max(np.abs(W)) < 1e-9


def test_E_equivariance(rng):
    om = standard_omega(2)
    r = random_sym(rng, 4)
    P = np.eye(4) + 0.3 * rng.standard_normal((4, 4))
    # F^T (P^T om P) F = om, so P F is symplectic
    S = P @ darboux_frame(P.T @ om @ P)
    assert np.allclose(S.T @ om @ S, om)
    E = E_part(om, r)
    r2 = S.T @ r @ S
    E2 = np.einsum("abcd,ai,bj,ck,dl->ijkl", E, S, S, S, S)
    assert np.max(np.abs(E_part(om, r2) - E2)) < 1e-8


def test_dimension_two_rejected():
    with pytest.raises(DimensionTooSmall):
        decompose(np.zeros((2,) * 4), standard_omega(1), np.zeros((2, 2)))


def test_reduced_connection_is_ricci_type(chart2, chart3):
    for chart in (chart2, chart3):
        G = chart.christoffel_field()
        ys = sample_points(chart, 4, 0)
        ok, worst = is_ricci_type(G, ys)
        assert ok and worst < 1e-6
        for y in ys:
            cd = curvature_data(G, y, chart.reduced_form(y))
            assert max(cd.symmetry_residuals()) < 1e-8
            assert np.max(np.abs(cd.ricci - cd.ricci.T)) < 1e-8
            assert abs(np.trace(cd.rho)) < 1e-9
            assert np.allclose(cd.E + cd.W, cd.R_under)
            # W is Ricci-trace-free
            Wendo = raise_curvature(cd.W, chart.reduced_form(y))
            assert np.max(np.abs(ricci(Wendo, chart.reduced_form(y))[0])) < 1e-8
            gap = np.max(np.abs(reconstruct_curvature(cd.rho, chart.reduced_form(y)) - cd.R_endo))
            assert gap < 1e-6


def test_ricci_convention_matches_closed_form(chart2, y2):
    cd = curvature_data(chart2.christoffel_field(), y2, chart2.reduced_form(y2))
    assert np.max(np.abs(cd.rho - chart2.prop31_invariants(y2).rho)) < 1e-8


def test_curvature_decays_without_richardson(chart2, y2):
    G = chart2.christoffel_field()
    om = chart2.reduced_form(y2)
    w1 = curvature_data(G, y2, om, 1e-2, richardson=False).w_norm
    w2 = curvature_data(G, y2, om, 5e-3, richardson=False).w_norm
    assert w1 / w2 > 3


def test_perturbed_not_ricci_type(chart2):
    G = chart2.christoffel_field().perturbed()
    ok, worst = is_ricci_type(G, sample_points(chart2, 2, 0))
    assert not ok and worst > 1e-3
