"""Curvature identities of Ricci-type connections and extraction of (u, f, K).

Covariant derivatives of tensor fields all go through :func:`covariant_derivative`,
i.e. the same central-difference stencil as the curvature engine plus the
Christoffel correction for each slot.
"""

from __future__ import annotations

import numpy as np

from . import _fd
from .curvature import curvature_fd, ricci
from .reduction import K_invariant


def reconstruct_curvature(rho, omega):
    """Curvature endomorphism R[l, k, i, j] determined by the Ricci endomorphism.

    R(X, Y) = -1/(2(n+1)) [ -2 omega(X, Y) rho - rho Y (x) X_ + rho X (x) Y_
                            - X (x) (rho Y)_ + Y (x) (rho X)_ ],
    where V_ = omega(V, .).
    """
    rho = np.asarray(rho, dtype=float)
    omega = np.asarray(omega, dtype=float)
    d = rho.shape[0]
    n = d // 2
    eye = np.eye(d)
    rw = rho.T @ omega  # rw[j, k] = omega(rho e_j, e_k)
    R = (-2.0 * np.einsum("ij,lk->lkij", omega, rho)
         - np.einsum("lj,ik->lkij", rho, omega)
         + np.einsum("li,jk->lkij", rho, omega)
         - np.einsum("li,jk->lkij", eye, rw)
         + np.einsum("lj,ik->lkij", eye, rw))
    return -R / (2.0 * (n + 1))


def covariant_derivative(Gamma, field, y, slots, h: float = 1e-4, richardson: bool = True):
    """nabla T at ``y`` with the derivative direction as the new leading axis.

    ``slots`` lists the variance of each index of ``field(y)``: ``"up"`` or
    ``"down"``.
    """
    y = np.asarray(y, dtype=float)
    T = np.asarray(field(y))
    G = Gamma(y)  # G[k, i, j]
    out = _fd.gradient(field, y, h, richardson)
    for pos, kind in enumerate(slots):
        # move slot ``pos`` to the end, contract with Gamma, move back
        Tm = np.moveaxis(T, pos, -1)
        if kind == "up":
            corr = np.einsum("aic,...c->i...a", G, Tm)
        else:
            corr = -np.einsum("cia,...c->i...a", G, Tm)
        out = out + np.moveaxis(corr, -1, pos + 1)
    return out


def rho_field_from_curvature(Gamma, h: float = 1e-4):
    """Ricci endomorphism of ``Gamma`` as a field, via finite-difference curvature."""

    def rho(y):
        return ricci(curvature_fd(Gamma, y, h), Gamma.omega(y))[1]

    return rho


def u_design(omega, n):
    """Linear map u -> stacked -1/(2n+1) [X (x) u_ + u (x) X_] over basis X."""
    d = 2 * n
    M = np.zeros((d, d, d, d))  # [i, a, b, component of u]
    for i in range(d):
        for c in range(d):
            # u = e_c
            M[i, i, :, c] += omega[c, :]
            M[i, c, :, c] += omega[i, :]
    return -M.reshape(d ** 3, d) / (2 * n + 1)


def extract_u(Gamma, rho_field, y, h: float = 1e-4):
    """Least-squares u with nabla_X rho = -1/(2n+1)[X (x) u_ + u (x) X_].

    Returns ``(u, residual)``; the residual is the max deviation of the fitted form.
    """
    n = Gamma.n
    nabla_rho = covariant_derivative(Gamma, rho_field, y, ("up", "down"), h)
    M = u_design(Gamma.omega(y), n)
    b = nabla_rho.reshape(-1)
    u, *_, sv = np.linalg.lstsq(M, b, rcond=None)
    if sv[-1] < 1e-12 * sv[0]:
        raise np.linalg.LinAlgError("u fit is rank deficient")
    return u, float(np.max(np.abs(M @ u - b)))


def extract_f(Gamma, rho, u_field, y, h: float = 1e-4):
    """f from nabla_X u = -(2n+1)/(2(n+1)) rho^2 X + f X; returns ``(f, residual)``."""
    n = Gamma.n
    d = 2 * n
    nabla_u = covariant_derivative(Gamma, u_field, y, ("up",), h)  # [i, a] = (nabla_i u)^a
    N = nabla_u.T + (2 * n + 1) / (2.0 * (n + 1)) * (rho @ rho)
    f = float(np.trace(N) / d)
    return f, float(np.max(np.abs(N - f * np.eye(d))))


def check_K(samples):
    """K = mean of tr rho^2 + 4(n+1)/(2n+1) f over samples, and max - min spread."""
    values = [K_invariant(np.asarray(rho), f) for rho, f in samples]
    if len(values) < 2:
        raise ValueError("check_K needs at least two samples")
    return float(np.mean(values)), float(max(values) - min(values))


def check_cyclic_nabla_r(Gamma, y, r_field=None, h: float = 1e-4):
    """Max over basis triples of the cyclic sum of (nabla_X r)(Y, Z).

    ``r_field`` defaults to the Ricci tensor of ``Gamma`` computed by finite
    differences.
    """
    if r_field is None:
        def r_field(yy):
            return ricci(curvature_fd(Gamma, yy, h), Gamma.omega(yy))[0]
    nr = covariant_derivative(Gamma, r_field, y, ("down", "down"), h)
    cyc = nr + nr.transpose(1, 2, 0) + nr.transpose(2, 0, 1)
    return float(np.max(np.abs(cyc)))


def nabla_omega(Gamma, y, h: float = 1e-4, richardson: bool = True):
    """Max |nabla omega| component."""
    return float(np.max(np.abs(covariant_derivative(Gamma, Gamma.omega, y, ("down", "down"), h,
                                                     richardson))))
