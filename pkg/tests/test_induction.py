import numpy as np

from ricci_reduce.induction import (S, XI, AmbientModel, ContactModel, ambient_connection,
                                    contact_connection, contact_curvature, flatness_check,
                                    frame_curvature, frame_torsion, nabla_mu, realize,
                                    reduction_closure, reeb_affine_residual,
                                    third_covariant_derivative_psi)
from ricci_reduce.local_model import PointInvariants, model_chart
from ricci_reduce.reduction import sample_points


def test_frame_formulas_on_zero_data():
    C = np.zeros((3, 3, 3))
    K = np.zeros((3, 3, 3))
    assert np.max(np.abs(frame_torsion(C, K))) == 0
    assert np.max(np.abs(frame_curvature(C, np.zeros((3,) * 4), K))) == 0


def test_zero_invariants_contact_connection():
    chart = model_chart(PointInvariants(np.zeros((4, 4)), np.zeros(4), 0.0))
    model = ContactModel(chart)
    y = np.zeros(4)
    C, torsion = contact_connection(model, y)
    assert torsion < 1e-12
    expected = np.zeros((5, 5, 5))
    expected[1:, 1:, 0] = -chart.reduced_form(y)
    expected[1:, 1:, 1:] = np.transpose(chart.christoffel(y), (1, 2, 0))
    assert np.max(np.abs(C - expected)) < 1e-14


def test_contact_curvature(chart2, y2):
    model = ContactModel(chart2)
    R, gaps = contact_curvature(model, y2)
    assert max(gaps.values()) < 1e-6
    assert reeb_affine_residual(model, y2) < 1e-6
    assert contact_connection(model, y2)[1] < 1e-10


def test_ambient_flat(chart2):
    amb = AmbientModel(ContactModel(chart2))
    ys = sample_points(chart2, 3, 0)
    out = flatness_check(amb, ys, (0.0, 0.7))
    assert out["curvature"] < 1e-6 and out["nabla_mu"] < 1e-6 and out["torsion"] < 1e-12
    C, _ = ambient_connection(amb, ys[0])
    assert C[S, S, S] == 1.0


def test_mu_pairing(chart2, y2):
    amb = AmbientModel(ContactModel(chart2))
    mu = amb.mu(y2, 0.5)
    assert abs(mu[S, XI] - np.exp(1.0)) < 1e-14
    assert np.allclose(mu, -mu.T)
    assert nabla_mu(amb, y2, 0.5) < 1e-6


def test_psi(chart2):
    amb = AmbientModel(ContactModel(chart2))
    ys = sample_points(chart2, 2, 1)
    e2s = third_covariant_derivative_psi(amb, lambda s: np.exp(2 * s), ys, (0.0, 0.3))
    lin = third_covariant_derivative_psi(amb, lambda s: s, ys)
    const = third_covariant_derivative_psi(amb, lambda s: 3.0, ys,
                                           derivatives=(lambda s: 0, lambda s: 0, lambda s: 0))
    assert e2s < 1e-6 and lin > 1e-2 and const == 0


def test_closure(chart3):
    amb = AmbientModel(ContactModel(chart3))
    y = sample_points(chart3, 1, 4)[0]
    gaps = reduction_closure(amb, y)
    assert gaps["Gamma"] < 1e-6
    assert max(gaps.values()) < 1e-6
    assert realize(amb, y).shape[0] == chart3.dim + 2
