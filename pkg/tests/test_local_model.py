import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ricci_reduce.core_linalg import extended_omega, sp_membership, standard_omega
from ricci_reduce.local_model import PointInvariants, build_A, model_chart, quadric_of, round_trip


def test_zero_invariants_pattern():
    inv = PointInvariants(np.zeros((4, 4)), np.zeros(4), 0.0)
    A = build_A(inv).matrix
    expected = np.zeros((6, 6))
    expected[1, 0] = 1.0  # A e0 = e0'
    assert np.array_equal(A, expected)


def test_e0_on_quadric(rng):
    inv = PointInvariants.random(2, rng)
    e0 = np.eye(6)[0]
    assert abs(quadric_of(inv).value(e0) - 1.0) < 1e-14
    ok, _ = sp_membership(build_A(inv).space, build_A(inv).matrix)
    assert ok


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.sampled_from([1, 2, 3]))
def test_round_trip(seed, n):
    inv = PointInvariants.random(n, np.random.default_rng(seed))
    _, gaps = round_trip(inv)
    assert max(gaps.values()) < 1e-8


def test_from_K(rng):
    base = PointInvariants.random(2, rng)
    inv = PointInvariants.from_K(base.rho0, base.u0, 3.5)
    assert abs(inv.K - 3.5) < 1e-12


@pytest.mark.parametrize("rho, u", [
    (np.eye(4), np.zeros(4)),            # not in sp
    (np.zeros((3, 3)), np.zeros(3)),     # odd dimension
    (np.zeros((4, 4)), np.zeros(2)),     # u of wrong length
])
def test_validation(rho, u):
    with pytest.raises(ValueError):
        PointInvariants(rho, u, 0.0)


def test_symmetric_input_stays_symmetric():
    # rho^2 = 4(n+1)^2 lambda I, f = 2(n+1)(2n+1) lambda and u = 0 give A^2 = lambda I
    lam = 0.3
    rho = 6 * np.sqrt(lam) * np.diag([1.0, -1.0, -1.0, 1.0])
    assert np.allclose(standard_omega(2) @ rho, (standard_omega(2) @ rho).T)
    f = 2 * 3 * 5 * lam
    A = build_A(PointInvariants(rho, np.zeros(4), f)).matrix
    assert np.allclose(A @ A, lam * np.eye(6))
    chart = model_chart(PointInvariants(rho, np.zeros(4), f))
    for y in ([0.05, 0, 0, 0], [0, -0.03, 0.02, 0.01]):
        assert np.max(np.abs(chart.prop31_invariants(np.array(y)).u)) < 1e-10


def test_equal_data_equal_connection(rng):
    inv = PointInvariants.random(2, rng)
    copy = PointInvariants(inv.rho0.copy(), inv.u0.copy(), inv.f0)
    y = np.array([0.02, -0.01, 0.03, 0.0])
    G1 = model_chart(inv).christoffel(y)
    G2 = model_chart(copy).christoffel(y)
    assert np.array_equal(G1, G2)
    assert np.array_equal(build_A(inv).space.form, extended_omega(2))
