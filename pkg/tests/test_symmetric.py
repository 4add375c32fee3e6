import numpy as np
import pytest
import scipy.linalg

from ricci_reduce.core_linalg import SpElement, random_sp_element
from ricci_reduce.reduction import ReductionChart, find_surface_point, sample_points
from ricci_reduce.symmetric import (NegativeLambda, NotSymmetricError, PositiveLambda, ZeroLambda,
                                    canonical_element, case3_bracket, case3_matrix_gap, classify,
                                    jacobi_residual, random_triple, sigma_a_point_case1,
                                    symmetry_map, symmetry_matrix, transvection_algebra,
                                    ts_n_projection, verify_symmetric_reduction)

TAGS = [PositiveLambda(0.8), NegativeLambda(1.3, 2), NegativeLambda(0.5, 1), ZeroLambda(2, 1),
        ZeroLambda(1, 1), ZeroLambda(3, 2)]


def conjugate(A: SpElement, rng, scale=0.3):
    form = A.space.form
    S = rng.standard_normal(form.shape)
    P = scipy.linalg.expm(scale * np.linalg.solve(form, S + S.T))
    return SpElement(A.space, P @ A.matrix @ np.linalg.inv(P), tol=1e-8)


@pytest.mark.parametrize("tag", TAGS, ids=str)
def test_classify_canonical(tag):
    case = classify(canonical_element(tag, 2))
    assert case.case_tag == tag
    assert np.array_equal(case.canonical_transform, np.eye(6))


@pytest.mark.parametrize("tag", TAGS, ids=str)
def test_classify_conjugated(tag, rng):
    case = classify(conjugate(canonical_element(tag, 2), rng))
    assert case.case_tag.name == tag.name
    assert case.case_tag.params() == pytest.approx(tag.params(), abs=1e-8)
    assert case.transform_residual < 1e-8


def test_not_symmetric():
    with pytest.raises(NotSymmetricError):
        classify(random_sp_element(2, 3))


@pytest.mark.parametrize("tag", [PositiveLambda(1.0), NegativeLambda(1.0, 2), ZeroLambda(2, 1)],
                         ids=str)
def test_reduction_is_symmetric(tag):
    A = canonical_element(tag, 2)
    x0, sign = find_surface_point(A)
    if sign < 0:
        A = -A
    chart = ReductionChart.at(A, x0=x0)
    out = verify_symmetric_reduction(classify(A), chart, sample_points(chart, 2, 0))
    assert out["u"] < 1e-8 and out["nabla_rho"] < 1e-6 and out["nabla_R"] < 1e-6


@pytest.mark.parametrize("tag", TAGS[:4], ids=str)
def test_transvection_dims(tag):
    A = canonical_element(tag, 2)
    x0, sign = find_surface_point(A)
    alg = transvection_algebra(A if sign > 0 else -A, x0)
    assert alg.dims["p'"] == 4
    assert max(alg.residuals.values()) < 1e-10


def test_symmetry_is_involution(rng):
    A = canonical_element(PositiveLambda(0.5), 2)
    x0, _ = find_surface_point(A)
    B = symmetry_matrix(A, x0)
    assert np.allclose(B @ B, np.eye(6))
    assert np.allclose(symmetry_map(A, x0, x0), x0)
    assert np.allclose(B @ A.matrix, A.matrix @ B)
    with pytest.raises(ValueError):
        symmetry_map(A.matrix, x0, x0)


def test_case3_structure(rng):
    p, q, d0 = 2, 1, 2
    Om1 = np.array([[0.0, 1.0], [-1.0, 0.0]])
    X, Y, Z = (random_triple(p, q, d0, rng) for _ in range(3))
    assert jacobi_residual(X, Y, Z, Om1) < 1e-12
    assert case3_matrix_gap(X, Y, Om1, p, q) < 1e-12
    F = case3_bracket(X, Y, Om1)[1]
    assert np.allclose(F, F.T)


def test_ts_n(rng):
    k = 0.7
    for _ in range(5):
        u, v = sigma_a_point_case1(k, rng, 4)
        assert abs(-2 * k * u @ v - 1) < 1e-12
        a, b = ts_n_projection(k, u, v)
        assert abs(a @ a - 1) < 1e-12 and abs(a @ b) < 1e-12
        t = rng.standard_normal()
        a2, b2 = ts_n_projection(k, np.exp(k * t) * u, np.exp(-k * t) * v)
        assert np.max(np.abs(a2 - a)) < 1e-10 and np.max(np.abs(b2 - b)) < 1e-10
    with pytest.raises(ValueError):
        ts_n_projection(k, np.zeros(4), np.ones(4))
