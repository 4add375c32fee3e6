"""Generators with A^2 = lambda I: classification, symmetries and transvection algebras.

Canonical forms (columns of ``canonical_transform`` are the adapted basis):

* lambda = k^2 > 0:  A = diag(k I, -k I),  form [[0, I], [-I, 0]];
* lambda = -k^2 < 0: A = [[0, -k I], [k I, 0]],  form [[0, I_pq], [-I_pq, 0]];
* lambda = 0, rank k, signature r: basis (V0, V1, V2),
  A = [[0, 0, 0], [0, 0, I_{r,k-r}], [0, 0, 0]],
  form [[Omega_1, 0, 0], [0, 0, -I], [0, I, 0]].

In every case Omega'(x, Ax) = x^T form A x, so the quadric reads
-2k u.v = 1, k(|u_+|^2 + |v_+|^2 - |u_-|^2 - |v_-|^2) = 1 and
|w_+|^2 - |w_-|^2 = 1 respectively.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core_linalg import SpElement, SymplecticSpace, standard_omega
from .curvature import curvature_data
from .frame_link import darboux_frame
from .reduction import ReductionChart, find_surface_point
from .ricci_identities import covariant_derivative


class NotSymmetricError(ValueError):
    """A^2 is not a multiple of the identity within tolerance."""


@dataclass(frozen=True)
class PositiveLambda:
    k: float
    name: str = "PositiveLambda"

    def params(self) -> dict:
        return {"k": self.k}


@dataclass(frozen=True)
class NegativeLambda:
    k: float
    p: int
    name: str = "NegativeLambda"

    def params(self) -> dict:
        return {"k": self.k, "p": self.p}


@dataclass(frozen=True)
class ZeroLambda:
    rank: int
    signature: int
    name: str = "ZeroLambda"

    def params(self) -> dict:
        return {"rank": self.rank, "signature": self.signature}


def ipq(p: int, q: int) -> np.ndarray:
    return np.diag(np.concatenate([np.ones(p), -np.ones(q)]))


def canonical_form(tag, n: int):
    """(A, form) of the canonical model for ``tag`` on R^{2n+2}."""
    m = n + 1
    Z = np.zeros((m, m))
    I = np.eye(m)
    if isinstance(tag, PositiveLambda):
        A = np.block([[tag.k * I, Z], [Z, -tag.k * I]])
        form = np.block([[Z, I], [-I, Z]])
    elif isinstance(tag, NegativeLambda):
        J = ipq(tag.p, m - tag.p)
        A = np.block([[Z, -tag.k * I], [tag.k * I, Z]])
        form = np.block([[Z, J], [-J, Z]])
    elif isinstance(tag, ZeroLambda):
        k, d0 = tag.rank, 2 * m - 2 * tag.rank
        A = np.zeros((2 * m, 2 * m))
        A[d0:d0 + k, d0 + k:] = ipq(tag.signature, k - tag.signature)
        form = np.zeros((2 * m, 2 * m))
        form[:d0, :d0] = standard_omega(d0 // 2) if d0 else np.zeros((0, 0))
        form[d0:d0 + k, d0 + k:] = -np.eye(k)
        form[d0 + k:, d0:d0 + k] = np.eye(k)
    else:
        raise TypeError(f"unknown case tag {tag!r}")
    return A, form


def canonical_element(tag, n: int) -> SpElement:
    A, form = canonical_form(tag, n)
    return SpElement(SymplecticSpace(2 * n + 2, form), A)


@dataclass(frozen=True)
class SymmetricCase:
    """Result of :func:`classify`.

    ``canonical_transform`` S has S^T form S = canonical form and
    S^{-1} A S = canonical A.
    """

    lam: float
    case_tag: object
    canonical_transform: np.ndarray = field(repr=False)
    A: SpElement = field(repr=False)
    residual: float = 0.0
    transform_residual: float = 0.0
    condition: float = 1.0

    @property
    def name(self) -> str:
        return self.case_tag.name


def _null_space(M, tol):
    U, s, Vh = np.linalg.svd(M)
    scale = s[0] if s.size and s[0] > 0 else 1.0
    rank = int(np.sum(s > tol * scale))
    return Vh[rank:].conj().T, s


def _case1(A, form, k, tol):
    m = A.shape[0]
    Ep, _ = _null_space(A - k * np.eye(m), tol)
    Em, _ = _null_space(A + k * np.eye(m), tol)
    if Ep.shape[1] != m // 2 or Em.shape[1] != m // 2:
        raise NotSymmetricError("eigenspaces of A are not half-dimensional")
    F = Em @ np.linalg.inv(Ep.T @ form @ Em)
    return np.column_stack([Ep, F]), PositiveLambda(k)


def _case2(A, form, k, tol):
    m = A.shape[0]
    # e + i f in the -ik eigenspace gives A e = k f, A f = -k e
    Z, _ = _null_space(A + 1j * k * np.eye(m), tol)
    if Z.shape[1] != m // 2:
        raise NotSymmetricError("complex eigenspaces of A are not half-dimensional")
    H = 1j * (Z.T @ form @ Z.conj())
    H = 0.5 * (H + H.conj().T)
    vals, vecs = np.linalg.eigh(H)
    order = np.argsort(-vals)
    vals, vecs = vals[order], vecs[:, order]
    if np.min(np.abs(vals)) < tol * np.max(np.abs(vals)):
        raise NotSymmetricError("Hermitian form on the eigenspace is degenerate")
    p = int(np.sum(vals > 0))
    W = vecs * np.sqrt(2.0 / np.abs(vals))
    Zp = Z @ W.conj()
    return np.column_stack([Zp.real, Zp.imag]), NegativeLambda(k, p)


def _case3(A, form, tol):
    U, s, _ = np.linalg.svd(A)
    k = int(np.sum(s > tol * s[0]))
    V1 = U[:, :k]
    K, _ = _null_space(A, tol)
    # V0: Euclidean complement of V1 inside ker A
    V0, _ = _null_space((V1.T @ K), tol)
    V0 = K @ V0
    if V0.shape[1]:
        V0 = V0 @ darboux_frame(V0.T @ form @ V0)
    # V2: Omega'(v2_j, v1_i) = delta_ij, Omega'(V0, v2) = 0, then isotropic
    lhs = np.vstack([V1.T @ form, V0.T @ form])
    rhs = np.vstack([-np.eye(k), np.zeros((V0.shape[1], k))])
    V2 = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    G = V2.T @ form @ V2
    V2 = V2 - 0.5 * V1 @ G
    Ap = V2.T @ form @ A @ V2
    Ap = 0.5 * (Ap + Ap.T)
    vals, Q = np.linalg.eigh(Ap)
    order = np.argsort(-vals)
    vals, Q = vals[order], Q[:, order]
    T = Q / np.sqrt(np.abs(vals))
    V2 = V2 @ T
    V1 = V1 @ np.linalg.inv(T).T
    r = int(np.sum(vals > 0))
    return np.column_stack([V0, V1, V2]), ZeroLambda(k, r)


def classify(A: SpElement, tol: float = 1e-9, canonical_tol: float = 1e-8) -> SymmetricCase:
    """Decide whether A^2 = lambda I and build the adapted symplectic basis.

    ``tol`` governs case detection and rank decisions; ``canonical_tol`` is
    the bound on the reconstructed canonical form.
    """
    M = np.asarray(A.matrix, dtype=float)
    form = A.space.form
    m = M.shape[0]
    scale = float(np.max(np.abs(M)))
    if scale == 0:
        raise NotSymmetricError("A = 0")
    A2 = M @ M
    lam = float(np.trace(A2) / m)
    resid = float(np.max(np.abs(A2 - lam * np.eye(m)))) / scale ** 2
    if resid > tol:
        raise NotSymmetricError(f"|A^2 - lambda I| = {resid:.3e} exceeds {tol:g}")
    n = m // 2 - 1
    if lam > tol * scale ** 2:
        S, tag = _case1(M, form, float(np.sqrt(lam)), tol)
    elif lam < -tol * scale ** 2:
        S, tag = _case2(M, form, float(np.sqrt(-lam)), tol)
    else:
        lam = 0.0
        S, tag = _case3(M, form, tol)
    cA, cform = canonical_form(tag, n)
    if np.max(np.abs(M - cA)) <= canonical_tol and np.max(np.abs(form - cform)) <= canonical_tol:
        S = np.eye(m)
    Sinv = np.linalg.inv(S)
    t_res = max(float(np.max(np.abs(S.T @ form @ S - cform))),
                float(np.max(np.abs(Sinv @ M @ S - cA))) / scale)
    if t_res > canonical_tol:
        raise NotSymmetricError(f"canonical form reconstruction failed (residual {t_res:.3e})")
    return SymmetricCase(lam, tag, S, A, resid, t_res, float(np.linalg.cond(S)))


def verify_symmetric_reduction(case: SymmetricCase, chart: ReductionChart, samples,
                               h_outer: float = 1e-3) -> dict:
    """Max |u|, |nabla rho| and |nabla R_| over ``samples`` of the reduced chart."""
    Gamma = chart.christoffel_field()

    def rho(y):
        return chart.prop31_invariants(y).rho

    def R_under(y):
        return curvature_data(Gamma, y, chart.reduced_form(y)).R_under

    u_max = nr_max = nR_max = 0.0
    for y in samples:
        u_max = max(u_max, float(np.max(np.abs(chart.prop31_invariants(y).u))))
        nr = covariant_derivative(Gamma, rho, y, ("up", "down"))
        nr_max = max(nr_max, float(np.max(np.abs(nr))))
        nR = covariant_derivative(Gamma, R_under, y, ("down",) * 4, h_outer)
        nR_max = max(nR_max, float(np.max(np.abs(nR))))
    return {"u": u_max, "nabla_rho": nr_max, "nabla_R": nR_max, "lambda": case.lam}


def ts_n_projection(k: float, u, v):
    """(u/|u|, |u| (v + u / (2k |u|^2)))."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu = float(np.linalg.norm(u))
    if nu == 0:
        raise ValueError("u = 0 has no image in TS^n")
    return u / nu, nu * (v + u / (2.0 * k * nu ** 2))


def sigma_a_point_case1(k: float, rng, dim: int):
    """Random (u, v) with -2k u.v = 1."""
    u = rng.standard_normal(dim)
    v = rng.standard_normal(dim)
    v = v - (u @ v + 1.0 / (2 * k)) * u / (u @ u)
    return u, v


def symmetry_map(A, y, u, form=None):
    """B_y u = -u + 2 Omega'(u, Ay) y - 2 Omega'(u, y) Ay."""
    if isinstance(A, SpElement):
        form = A.space.form
        A = A.matrix
    if form is None:
        raise ValueError("form is required when A is a bare matrix")
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    Ay = A @ y
    return -u + 2.0 * (u @ form @ Ay) * y - 2.0 * (u @ form @ y) * Ay


def symmetry_matrix(A: SpElement, y) -> np.ndarray:
    """Matrix of B_y."""
    return np.column_stack([symmetry_map(A, y, e) for e in np.eye(A.space.dim)])


@dataclass(frozen=True)
class TransvectionAlgebra:
    g_prime: list = field(repr=False)
    p_prime: list = field(repr=False)
    k_prime: list = field(repr=False)
    closure: list = field(repr=False)
    singular_values: np.ndarray = field(repr=False)
    residuals: dict = field(default_factory=dict)

    @property
    def dims(self) -> dict:
        return {"g'": len(self.g_prime), "p'": len(self.p_prime), "k'": len(self.k_prime),
                "p'+[p',p']": len(self.closure)}


def _sym_basis(m):
    out = []
    for i in range(m):
        for j in range(i, m):
            S = np.zeros((m, m))
            S[i, j] = S[j, i] = 1.0
            out.append(S)
    return out


def _span(mats, tol=1e-9):
    """Orthonormal basis (Frobenius) of the span of ``mats``."""
    if not mats:
        return []
    V = np.array([M.ravel() for M in mats])
    U, s, Vh = np.linalg.svd(V, full_matrices=False)
    rank = int(np.sum(s > tol * max(1.0, s[0])))
    shape = mats[0].shape
    return [Vh[i].reshape(shape) for i in range(rank)]


def transvection_algebra(A: SpElement, y0=None, tol: float = 1e-9) -> TransvectionAlgebra:
    """Commutant g' of A in sp, its sigma-eigenspaces and p' + [p', p']."""
    M = np.asarray(A.matrix, dtype=float)
    form = A.space.form
    m = M.shape[0]
    if y0 is None:
        y0, sign = find_surface_point(A)
        if sign < 0:
            raise ValueError("the quadric of A is empty; pass -A")
    B = symmetry_matrix(A, y0)
    inv = np.linalg.inv(form)
    gens = [inv @ S for S in _sym_basis(m)]

    def solve(extra):
        rows = np.array([np.concatenate([(C @ M - M @ C).ravel(), extra(C).ravel()])
                         for C in gens]).T
        null, s = _null_space(rows, tol)
        return [sum(c * G for c, G in zip(col.real, gens)) for col in null.T], s

    g, sv = solve(lambda C: np.zeros(0))
    p, _ = solve(lambda C: B @ C @ B + C)
    k, _ = solve(lambda C: B @ C @ B - C)
    g, p, k = _span(g, tol), _span(p, tol), _span(k, tol)
    brackets = [X @ Y - Y @ X for i, X in enumerate(p) for Y in p[i + 1:]]
    closure = _span(p + brackets, tol)
    res = {
        "sp": max((float(np.max(np.abs(form @ C - (form @ C).T))) for C in g), default=0.0),
        "commute": max((float(np.max(np.abs(C @ M - M @ C))) for C in g), default=0.0),
        "[p,p] in k": max((float(np.max(np.abs(Z - B @ Z @ B))) / 2 for Z in brackets),
                          default=0.0),
        "[k,p] in p": max((float(np.max(np.abs((X @ Y - Y @ X) + B @ (X @ Y - Y @ X) @ B))) / 2
                           for X in _span(brackets, tol) for Y in p), default=0.0),
    }
    return TransvectionAlgebra(g, p, k, closure, sv, res)


# -- case 3 structure -------------------------------------------------------


def case3_bracket(X, Y, Omega1):
    """Bracket of (B, F, C) triples.

    F'' is the symmetric part -B^T F' - F' B + B'^T F + F B' plus the
    C-terms, which is what the commutator of the corresponding matrices gives.
    """
    B, F, C = X
    B2, F2, C2 = Y
    if B.shape != B2.shape or F.shape != F2.shape or C.shape != C2.shape:
        raise ValueError("shape mismatch between triples")
    Fn = (-C.T @ Omega1 @ C2 + C2.T @ Omega1 @ C
          - B.T @ F2 - F2 @ B + B2.T @ F + F @ B2)
    return B @ B2 - B2 @ B, Fn, C @ B2 - C2 @ B


def case3_matrix(X, Omega1):
    """Element of g' (with D = 0) for the triple (B, F, C) in the (V0, V1, V2) basis."""
    B, F, C = X
    d0, k = C.shape
    M = np.zeros((d0 + 2 * k, d0 + 2 * k))
    M[:d0, d0 + k:] = C
    M[d0:d0 + k, :d0] = -C.T @ Omega1
    M[d0:d0 + k, d0:d0 + k] = -B.T
    M[d0:d0 + k, d0 + k:] = F
    M[d0 + k:, d0 + k:] = B
    return M


def case3_matrix_gap(X, Y, Omega1, p: int, q: int) -> float:
    """|[M(X), M(Y)] - M([X, Y])| after removing the central I_pq component in the F slot."""
    lhs = case3_matrix(X, Omega1) @ case3_matrix(Y, Omega1)
    lhs = lhs - case3_matrix(Y, Omega1) @ case3_matrix(X, Omega1)
    diff = lhs - case3_matrix(case3_bracket(X, Y, Omega1), Omega1)
    d0 = Omega1.shape[0]
    k = p + q
    J = ipq(p, q)
    blk = diff[d0:d0 + k, d0 + k:]
    diff[d0:d0 + k, d0 + k:] = blk - np.sum(blk * J) / k * J
    return float(np.max(np.abs(diff)))


def random_so_pq(p: int, q: int, rng):
    """B with B^T I_pq + I_pq B = 0."""
    J = ipq(p, q)
    S = rng.standard_normal((p + q, p + q))
    return J @ (S - S.T)


def random_triple(p: int, q: int, d0: int, rng):
    k = p + q
    F = rng.standard_normal((k, k))
    return random_so_pq(p, q, rng), F + F.T, rng.standard_normal((d0, k))


def jacobi_residual(X, Y, Z, Omega1) -> float:
    def br(a, b):
        return case3_bracket(a, b, Omega1)

    def add(*ts):
        return tuple(sum(parts) for parts in zip(*ts))

    total = add(br(X, br(Y, Z)), br(Y, br(Z, X)), br(Z, br(X, Y)))
    return max(float(np.max(np.abs(t))) if t.size else 0.0 for t in total)
