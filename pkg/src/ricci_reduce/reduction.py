"""Local Marsden-Weinstein reduction of the quadric Omega'(x, Ax) = 1.

A chart is the radially rescaled affine slice through a base point ``x0``,

    chi(y, 0) = s(z) z,   z = x0 + B y,   s(z) = Omega'(z, Az)^{-1/2},

moved along the flow by ``chi(y, t) = expm(tA) chi(y, 0)``.  The columns of
``B`` span the horizontal space at ``x0``.  Every quantity of the reduced
space is evaluated on the slice ``t = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from . import _fd
from .core_linalg import SpElement, standard_omega


class ChartDomainError(ValueError):
    """Raised when a chart is evaluated where it is not defined."""


class SurfaceNotFoundError(RuntimeError):
    """Neither A nor -A has a point on its quadric."""


@dataclass(frozen=True)
class RicciInvariants:
    rho: np.ndarray
    u: np.ndarray
    f: float
    K: float | None = None

    @property
    def n(self) -> int:
        return self.rho.shape[0] // 2

    def with_K(self) -> "RicciInvariants":
        return RicciInvariants(self.rho, self.u, self.f, K_invariant(self.rho, self.f))


def K_invariant(rho, f) -> float:
    n = rho.shape[0] // 2
    return float(np.trace(rho @ rho) + 4.0 * (n + 1) / (2 * n + 1) * f)


@dataclass(frozen=True)
class Quadric:
    generator: SpElement

    @property
    def A(self) -> np.ndarray:
        return self.generator.matrix

    @property
    def form(self) -> np.ndarray:
        return self.generator.space.form

    @property
    def n(self) -> int:
        return self.generator.n

    def value(self, x) -> float:
        return float(x @ self.form @ (self.A @ x))

    def flow(self, t) -> np.ndarray:
        return scipy.linalg.expm(t * self.A)


def scale_to_quadric(A: SpElement, z):
    """Rescale ``z`` onto the quadric; ``None`` if Omega'(z, Az) <= 0."""
    z = np.asarray(z, dtype=float)
    c = float(z @ A.space.form @ (A.matrix @ z))
    if c <= 0:
        return None
    return z / np.sqrt(c)


def find_surface_point(A: SpElement, eps: float = 1e-12, n_random: int = 200, seed: int = 0):
    """Return ``(x0, sign)`` with Omega'(x0, sign*A x0) = 1.

    Candidates are the eigenvectors of the symmetric matrix Omega' A (largest
    eigenvalue first), so a point is found whenever one exists; a seeded
    random search is kept as a backstop.  ``sign`` is -1 when the quadric of
    ``A`` is empty and that of ``-A`` is used instead.
    """
    rng = np.random.default_rng(seed)
    for sign in (1.0, -1.0):
        S = sign * A.space.form @ A.matrix
        S = 0.5 * (S + S.T)
        vals, vecs = np.linalg.eigh(S)
        candidates = [vecs[:, k] for k in np.argsort(vals)[::-1] if vals[k] > eps]
        candidates += list(rng.standard_normal((n_random, A.space.dim)))
        for z in candidates:
            c = float(z @ S @ z)
            if c > eps * float(z @ z):
                z = z * np.sign(z[np.argmax(np.abs(z))])
                return z / np.sqrt(c), int(sign)
    raise SurfaceNotFoundError("Omega'(x, Ax) <= 0 on every candidate for A and -A")


def horizontal_projection(form, A, x):
    """Projection of R^{2n+2} onto H_x = <x, Ax>^perp along span(x, Ax)."""
    Ax = A @ x
    # u -> u - Omega'(u, Ax) x + Omega'(u, x) Ax
    return np.eye(x.size) - np.outer(x, form @ Ax) + np.outer(Ax, form @ x)


def slice_basis_at(form, A, x0):
    """Orthonormal basis of H_{x0}, columns chosen by pivoted QR."""
    P = horizontal_projection(form, A, x0)
    Q, R, piv = scipy.linalg.qr(P, pivoting=True)
    m = x0.size - 2
    if abs(R[m - 1, m - 1]) < 1e-10:
        raise ChartDomainError("horizontal space at base point is degenerate")
    return Q[:, :m]


@dataclass(frozen=True)
class ReductionChart:
    """Local chart of the reduced space around ``base_point``.

    ``radius`` bounds |y|; ``fd_step`` is the default step of every finite
    difference taken in chart coordinates.
    """

    quadric: Quadric
    base_point: np.ndarray = field(repr=False)
    slice_basis: np.ndarray = field(repr=False)
    radius: float = 0.5
    fd_step: float = 1e-4
    tol: float = 1e-10

    def __post_init__(self):
        x0 = np.asarray(self.base_point, dtype=float)
        B = np.asarray(self.slice_basis, dtype=float)
        om, A = self.quadric.form, self.quadric.A
        if abs(self.quadric.value(x0) - 1.0) > self.tol:
            raise ChartDomainError("base point is not on the quadric")
        if B.shape != (x0.size, x0.size - 2):
            raise ChartDomainError(f"slice basis has shape {B.shape}")
        resid = max(np.max(np.abs(B.T @ om @ x0)), np.max(np.abs(B.T @ om @ (A @ x0))))
        if resid > self.tol * max(1.0, float(np.max(np.abs(B)))):
            raise ChartDomainError(f"slice basis is not horizontal (residual {resid:.2e})")
        gram = B.T @ om @ B
        if abs(np.linalg.det(gram)) < 1e-12:
            raise ChartDomainError("reduced form is degenerate at the base point")
        if self.radius <= 0 or self.fd_step <= 0:
            raise ValueError("radius and fd_step must be positive")
        object.__setattr__(self, "base_point", x0)
        object.__setattr__(self, "slice_basis", B)

    @classmethod
    def at(cls, A: SpElement, x0=None, slice_basis=None, radius=None, fd_step=1e-4):
        """Build a chart at ``x0`` (found automatically when omitted)."""
        if x0 is None:
            x0, sign = find_surface_point(A)
            if sign < 0:
                A = -A
        quadric = Quadric(A)
        x0 = np.asarray(x0, dtype=float)
        if slice_basis is None:
            slice_basis = slice_basis_at(quadric.form, quadric.A, x0)
        if radius is None:
            radius = default_radius(A.matrix, quadric.form, slice_basis)
        return cls(quadric, x0, slice_basis, radius=radius, fd_step=fd_step)

    @property
    def n(self) -> int:
        return self.quadric.n

    @property
    def dim(self) -> int:
        return 2 * self.quadric.n

    # -- chart map ---------------------------------------------------------

    def _slice(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape != (self.dim,):
            raise ChartDomainError(f"chart coordinates must have shape ({self.dim},)")
        if np.linalg.norm(y) >= self.radius * (1 + 1e-12):
            raise ChartDomainError(f"|y| = {np.linalg.norm(y):.3g} outside radius {self.radius:.3g}")
        z = self.base_point + self.slice_basis @ y
        q = self.quadric.value(z)
        if q <= 0:
            raise ChartDomainError("slice point has Omega'(z, Az) <= 0")
        return z, q

    def chart_point(self, y, t: float = 0.0):
        z, q = self._slice(y)
        x = z / np.sqrt(q)
        if t:
            x = self.quadric.flow(t) @ x
        return x

    def jacobian(self, y, method: str = "analytic", h: float | None = None):
        """d chi(y, 0) / dy as a (2n+2, 2n) matrix."""
        if method == "fd":
            h = self.fd_step if h is None else h
            return _fd.gradient(self.chart_point, y, h).T
        z, q = self._slice(y)
        s = q ** -0.5
        S = self.quadric.form @ self.quadric.A
        S = 0.5 * (S + S.T)
        B = self.slice_basis
        g = B.T @ (S @ z)  # (1/2) dq/dy
        ds = -(s ** 3) * g
        return s * B + np.outer(z, ds)

    def second_derivatives(self, y):
        """d^2 chi(y, 0) / dy_i dy_j with shape (2n, 2n, 2n+2)."""
        z, q = self._slice(y)
        s = q ** -0.5
        S = self.quadric.form @ self.quadric.A
        S = 0.5 * (S + S.T)
        B = self.slice_basis
        g = B.T @ (S @ z)
        ds = -(s ** 3) * g
        dds = 3.0 * s ** 5 * np.outer(g, g) - s ** 3 * (B.T @ S @ B)
        out = np.einsum("i,aj->ija", ds, B) + np.einsum("j,ai->ija", ds, B)
        out += np.einsum("ij,a->ija", dds, z)
        return out

    # -- horizontal geometry -------------------------------------------------

    def lift_matrix(self, y, method: str = "analytic"):
        """Columns are the horizontal lifts at chi(y, 0) of the coordinate vectors."""
        x = self.chart_point(y)
        J = self.jacobian(y, method)
        om, A = self.quadric.form, self.quadric.A
        # tau_j solves Omega'(J_j + tau_j Ax, x) = 0; Omega'(Ax, x) = -1
        tau = J.T @ om @ x
        L = J + np.outer(A @ x, tau)
        if np.linalg.matrix_rank(L, tol=1e-10) < self.dim:
            raise ChartDomainError("chart differential is singular")
        return L

    def horizontal_lift(self, y, X, t: float = 0.0, method: str = "analytic"):
        v = self.lift_matrix(y, method) @ np.asarray(X, dtype=float)
        if t:
            v = self.quadric.flow(t) @ v
        return v

    def reduced_form(self, y, method: str = "analytic"):
        L = self.lift_matrix(y, method)
        w = L.T @ self.quadric.form @ L
        return 0.5 * (w - w.T)

    def push_down(self, y, v, L=None, omega=None):
        """pi_* of a vector at chi(y, 0); only its horizontal part matters."""
        L = self.lift_matrix(y) if L is None else L
        omega = self.reduced_form(y) if omega is None else omega
        return np.linalg.solve(omega, L.T @ self.quadric.form @ v)

    # -- connection -----------------------------------------------------------

    def christoffel(self, y, method: str = "analytic", h: float | None = None,
                    return_asymmetry: bool = False):
        """Christoffel symbols ``G[k, i, j]`` of the reduced connection.

        The ambient derivative of the lift field of d_j along the lift of d_i
        is the slice derivative of the lift plus ``tau_i A lift_j`` for the
        flow component; the two correction terms of the reduced connection
        are then added and the result pushed down.  ``method="fd"`` takes the
        slice derivative by Richardson central differences of the lift
        field; ``"analytic"`` differentiates the chart in closed form.
        """
        om, A = self.quadric.form, self.quadric.A
        x = self.chart_point(y)
        Ax = A @ x
        if method == "fd":
            h = self.fd_step if h is None else h
            J = self.jacobian(y, "fd", h)
            tau = J.T @ om @ x
            L = J + np.outer(Ax, tau)
            dL = _fd.gradient(lambda yy: self.lift_matrix(yy, "fd"), y, h)  # (i, a, j)
            dL = np.transpose(dL, (0, 2, 1))  # (i, j, a)
        else:
            J = self.jacobian(y)
            H = self.second_derivatives(y)  # (i, j, a)
            tau = J.T @ om @ x
            L = J + np.outer(Ax, tau)
            # d_i (J_j + tau_j Ax) with tau_j = Omega'(J_j, x)
            dtau = np.einsum("ija,ab,b->ij", H, om, x) + J.T @ om @ J  # [i, j]
            dL = H + np.einsum("ij,a->ija", dtau, Ax) + np.einsum("j,ai->ija", tau, A @ J)
        # lift of d_i is J_i + tau_i Ax; the Ax part differentiates along the flow
        ambient = dL + np.einsum("i,aj->ija", tau, A @ L)  # nabla-dot_{L_i} L_j
        # nabla^Sigma = ambient - Omega'(A L_i, L_j) x ; then + Omega'(L_i, L_j) Ax
        AL = A @ L
        corr1 = np.einsum("ai,ab,bj->ij", AL, om, L)
        corr2 = L.T @ om @ L
        lifted = ambient - np.einsum("ij,a->ija", corr1, x) + np.einsum("ij,a->ija", corr2, Ax)
        omega = 0.5 * (corr2 - corr2.T)
        coeffs = np.einsum("ab,ijb->ija", L.T @ om, lifted)  # Omega'(L_a, lifted_ij)
        G = np.linalg.solve(omega, coeffs.reshape(-1, self.dim).T).reshape(self.dim, self.dim, self.dim)
        asym = float(np.max(np.abs(G - G.transpose(0, 2, 1))))
        G = 0.5 * (G + G.transpose(0, 2, 1))
        if return_asymmetry:
            return G, asym
        return G

    def christoffel_field(self, method: str = "analytic"):
        return ChristoffelField(lambda y: self.christoffel(y, method), self.dim,
                                self.reduced_form, chart=self)

    # -- closed-form invariants ----------------------------------------------

    def induced_map(self, y, k: int):
        """Matrix of X -> horizontal part of A^k X acting on horizontal vectors."""
        om, A = self.quadric.form, self.quadric.A
        x = self.chart_point(y)
        return horizontal_projection(om, A, x) @ np.linalg.matrix_power(A, k)

    def prop31_invariants(self, y) -> RicciInvariants:
        n = self.n
        om, A = self.quadric.form, self.quadric.A
        x = self.chart_point(y)
        L = self.lift_matrix(y)
        omega = self.reduced_form(y)
        P = horizontal_projection(om, A, x)
        A2x = A @ (A @ x)
        rho = self.push_down(y, -2.0 * (n + 1) * P @ A @ L, L, omega)
        u = self.push_down(y, -2.0 * (n + 1) * (2 * n + 1) * P @ A2x, L, omega)
        f = 2.0 * (n + 1) * (2 * n + 1) * float(A2x @ om @ (A @ x))
        return RicciInvariants(rho, u, f, K_invariant(rho, f))


def default_radius(A, form, B) -> float:
    """Half the radius on which Omega'(z, Az) stays >= 1/2 along the slice."""
    S = form @ A
    S = 0.5 * (S + S.T)
    norm = float(np.linalg.norm(B.T @ S @ B, 2))
    return 0.5 / np.sqrt(max(norm, 1e-12))


@dataclass(frozen=True)
class ChristoffelField:
    """Christoffel symbols on a coordinate patch, ``evaluator(y)[k, i, j]`` = Gamma^k_{ij}(y).

    ``omega_fn`` gives the symplectic form in the same coordinates (constant
    standard form when omitted).
    """

    evaluator: Callable = field(repr=False)
    dim: int
    omega_fn: Callable | None = field(default=None, repr=False)
    chart: ReductionChart | None = field(default=None, repr=False)

    def __call__(self, y):
        return np.asarray(self.evaluator(np.asarray(y, dtype=float)))

    @property
    def n(self) -> int:
        return self.dim // 2

    def omega(self, y):
        if self.omega_fn is None:
            return standard_omega(self.n)
        return self.omega_fn(np.asarray(y, dtype=float))

    @classmethod
    def flat(cls, dim: int) -> "ChristoffelField":
        return cls(lambda y: np.zeros((dim, dim, dim)), dim)

    def perturbed(self, delta: float = 0.1, index=(0, 1, 2), coordinate: int = 3):
        """Add ``delta * y[coordinate]`` to one symbol (and its mirror, keeping torsion zero).

        The defaults give the falsification fixture: the curvature acquires a
        non-Ricci-type part of size ~delta.
        """
        k, i, j = index

        def evaluator(y):
            G = self(y).copy()
            G[k, i, j] += delta * y[coordinate]
            if i != j:
                G[k, j, i] += delta * y[coordinate]
            return G

        return ChristoffelField(evaluator, self.dim, self.omega_fn, self.chart)


def sample_points(chart: ReductionChart, count: int, seed: int = 0, fraction: float = 0.5):
    """Seeded points uniformly inside ``fraction * radius``."""
    rng = np.random.default_rng(seed)
    d = chart.dim
    g = rng.standard_normal((count, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = fraction * chart.radius * rng.random(count) ** (1.0 / d)
    return g * r[:, None]
