"""Contact circle/line bundle over a reduced chart and its flat symplectic ambient space.

Everything is expressed in frames with coefficients depending only on the
chart point ``y``:

* contact level N, frame ``(X, U_1..U_2n)``: Reeb field and horizontal lifts,
  with brackets ``[U_i, U_j] = -2 omega_ij X`` and ``[X, U_i] = 0``;
* ambient level P = N x R, frame ``(d_s, X, U_1..U_2n)``.

Forms are evaluated with the convention ``dbeta(A, B) = 1/2 (A beta(B) -
B beta(A) - beta([A, B]))``, so nu = d(alpha) takes the values
``nu(U_i, U_j) = omega_ij`` and ``mu(d_s, X) = e^{2s}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fd
from .reduction import ReductionChart

S, XI = 0, 1  # ambient frame slots of d_s and X


def frame_torsion(C, K):
    """T(E_a, E_b) = nabla_a E_b - nabla_b E_a - [E_a, E_b] as [a, b, c]."""
    return C - C.transpose(1, 0, 2) - K


def frame_curvature(C, dC, K):
    """R(E_a, E_b) E_c as [a, b, c, e] from coefficients, their frame derivatives
    ``dC[a, b, c, e] = E_a(C[b, c, e])`` and structure constants ``K``."""
    R = dC - dC.transpose(1, 0, 2, 3)
    R = R + np.einsum("bcd,ade->abce", C, C) - np.einsum("acd,bde->abce", C, C)
    R = R - np.einsum("abd,dce->abce", K, C)
    return R


@dataclass(frozen=True)
class ContactModel:
    chart: ReductionChart
    h: float = 1e-4

    @property
    def n(self) -> int:
        return self.chart.n

    @property
    def size(self) -> int:
        return 2 * self.n + 1

    def data(self, y):
        """(Gamma, omega, rho, u, f) of the base at ``y``."""
        inv = self.chart.prop31_invariants(y)
        return self.chart.christoffel(y), self.chart.reduced_form(y), inv.rho, inv.u, inv.f

    def nu(self, y):
        w = self.chart.reduced_form(y)
        out = np.zeros((self.size, self.size))
        out[1:, 1:] = w
        return out

    def brackets(self, y):
        w = self.chart.reduced_form(y)
        K = np.zeros((self.size,) * 3)
        K[1:, 1:, 0] = -2.0 * w
        return K

    def connection(self, y):
        """C[a, b, c]: nabla_{E_a} E_b = sum_c C[a, b, c] E_c, frame (X, U_i)."""
        G, w, rho, u, f = self.data(y)
        n = self.n
        c1 = 1.0 / (2 * (n + 1))
        c2 = 1.0 / (2 * (n + 1) * (2 * n + 1))
        C = np.zeros((self.size,) * 3)
        C[1:, 1:, 1:] = np.transpose(G, (1, 2, 0))
        C[1:, 1:, 0] = -w
        C[0, 1:, 1:] = -c1 * rho.T
        C[1:, 0, 1:] = -c1 * rho.T
        C[0, 0, 1:] = -c2 * u
        return C

    def derivative_directions(self):
        """Chart direction along which each frame field differentiates functions of y."""
        D = np.zeros((self.size, 2 * self.n))
        D[1:, :] = np.eye(2 * self.n)
        return D

    def frame_derivative(self, func, y, h=None, richardson=True):
        """E_a(func) for a function of y only; leading axis is a."""
        h = self.h if h is None else h
        grad = _fd.gradient(func, y, h, richardson)
        return np.tensordot(self.derivative_directions(), grad, axes=(1, 0))

    def curvature(self, y, h=None, richardson=True):
        C = self.connection(y)
        dC = self.frame_derivative(self.connection, y, h, richardson)
        return frame_curvature(C, dC, self.brackets(y))


def contact_connection(model: ContactModel, y):
    """Coefficients of the contact-level connection and its torsion residual."""
    C = model.connection(y)
    return C, float(np.max(np.abs(frame_torsion(C, model.brackets(y)))))


def reeb_affine_residual(model: ContactModel, y):
    """max |nabla^2_{A,B} X + R(X, A) B|, zero iff X is an affine field."""
    C = model.connection(y)
    dC = model.frame_derivative(model.connection, y)
    R = frame_curvature(C, dC, model.brackets(y))
    # nabla_A nabla_B X - nabla_{nabla_A B} X, with nabla_B X = C[b, 0, :]
    second = dC[:, :, 0, :] + np.einsum("bd,ade->abe", C[:, 0, :], C)
    second -= np.einsum("abd,de->abe", C, C[:, 0, :])
    return float(np.max(np.abs(second + R[0])))


def contact_curvature(model: ContactModel, y, h=None):
    """Frame curvature of the contact connection and gaps to the closed forms."""
    R = model.curvature(y, h)
    G, w, rho, u, f = model.data(y)
    n = model.n
    d = 2 * n
    c1 = 1.0 / (2 * (n + 1))
    c2 = 1.0 / (2 * (n + 1) * (2 * n + 1))
    nu = w  # nu on horizontal lifts
    U = 1 + np.arange(d)
    exp_UVW = np.zeros((d, d, d, d + 1))
    exp_UVX = np.zeros((d, d, d + 1))
    exp_UXV = np.zeros((d, d, d + 1))
    exp_UXX = np.zeros((d, d + 1))
    nu_rho = rho.T @ nu  # nu_rho[j, k] = nu(rho e_j, e_k)
    nu_u = u @ nu  # nu(u, e_j)
    eye = np.eye(d)
    exp_UVW[..., 1:] = c1 * (np.einsum("jk,il->ijkl", nu_rho, eye)
                            - np.einsum("ik,jl->ijkl", nu_rho, eye))
    exp_UVX[..., 1:] = c2 * (np.einsum("j,il->ijl", nu_u, eye) - np.einsum("i,jl->ijl", nu_u, eye))
    exp_UXV[..., 1:] = c2 * np.einsum("j,il->ijl", nu_u, eye)
    exp_UXV[..., 0] = c1 * (nu @ rho)  # nu(U, rho V)
    exp_UXX[:, 1:] = -c2 * f * eye
    exp_UXX[:, 0] = -c2 * nu_u
    gaps = {
        "R(U,V)W": float(np.max(np.abs(R[np.ix_(U, U, U)] - exp_UVW))),
        "R(U,V)X": float(np.max(np.abs(R[np.ix_(U, U)][:, :, 0] - exp_UVX))),
        "R(U,X)V": float(np.max(np.abs(R[U][:, 0][:, U] - exp_UXV))),
        "R(U,X)X": float(np.max(np.abs(R[U, 0, 0] - exp_UXX))),
        "antisymmetry": float(np.max(np.abs(R + R.transpose(1, 0, 2, 3)))),
    }
    return R, gaps


@dataclass(frozen=True)
class AmbientModel:
    contact: ContactModel

    @property
    def n(self) -> int:
        return self.contact.n

    @property
    def size(self) -> int:
        return 2 * self.n + 2

    def gamma(self, y):
        """Symmetric form gamma on the contact frame (X, U_i)."""
        _, w, rho, u, f = self.contact.data(y)
        n = self.n
        c1 = 1.0 / (2 * (n + 1))
        c2 = 1.0 / (2 * (n + 1) * (2 * n + 1))
        g = np.zeros((self.size - 1,) * 2)
        g[0, 0] = c2 * f
        g[0, 1:] = g[1:, 0] = -c2 * (u @ w)
        g[1:, 1:] = c1 * (w @ rho)
        return g

    def connection(self, y):
        """C[a, b, c] in the frame (d_s, X, U_i)."""
        m = self.size
        C = np.zeros((m, m, m))
        C[1:, 1:, 1:] = self.contact.connection(y)
        C[1:, 1:, S] = self.gamma(y)
        for a in range(1, m):
            C[a, S, a] = 1.0
            C[S, a, a] = 1.0
        C[S, S, S] = 1.0
        return C

    def brackets(self, y):
        K = np.zeros((self.size,) * 3)
        K[1:, 1:, 1:] = self.contact.brackets(y)
        return K

    def mu(self, y, s: float = 0.0):
        """Frame values of mu = 2 e^{2s} ds ^ alpha + e^{2s} d alpha."""
        out = np.zeros((self.size,) * 2)
        out[S, XI] = 1.0
        out[XI, S] = -1.0
        out[1:, 1:] += self.contact.nu(y)
        return np.exp(2 * s) * out

    def derivative_directions(self):
        D = np.zeros((self.size, 2 * self.n))
        D[2:, :] = np.eye(2 * self.n)
        return D

    def frame_derivative(self, func, y, h=None, richardson=True):
        h = self.contact.h if h is None else h
        grad = _fd.gradient(func, y, h, richardson)
        return np.tensordot(self.derivative_directions(), grad, axes=(1, 0))

    def curvature(self, y, h=None, richardson=True):
        C = self.connection(y)
        dC = self.frame_derivative(self.connection, y, h, richardson)
        return frame_curvature(C, dC, self.brackets(y))


def ambient_connection(model: AmbientModel, y):
    C = model.connection(y)
    return C, float(np.max(np.abs(frame_torsion(C, model.brackets(y)))))


def nabla_mu(model: AmbientModel, y, s: float = 0.0):
    """Max |(nabla^1 mu)(E_a, E_b, E_c)|; d_s acts on e^{2s} by a factor 2."""
    C = model.connection(y)
    mu = model.mu(y, s)
    dmu = model.frame_derivative(lambda yy: model.mu(yy, s), y)
    dmu[S] += 2.0 * mu
    out = dmu - np.einsum("abd,dc->abc", C, mu) - np.einsum("acd,bd->abc", C, mu)
    return float(np.max(np.abs(out)))


def flatness_check(model: AmbientModel, samples, s_values=(0.0,)):
    """Max |R^1|, |nabla^1 mu| and torsion over sample points."""
    curv = mu_res = tors = 0.0
    for y in samples:
        curv = max(curv, float(np.max(np.abs(model.curvature(y)))))
        tors = max(tors, ambient_connection(model, y)[1])
        for s in s_values:
            mu_res = max(mu_res, nabla_mu(model, y, s))
    return {"curvature": curv, "nabla_mu": mu_res, "torsion": tors}


def _s_derivatives(psi, s, h=1e-2):
    """psi', psi'', psi''' at s by Richardson central differences."""
    def d(hh):
        f = {k: psi(s + k * hh) for k in (-2, -1, 0, 1, 2)}
        return ((f[1] - f[-1]) / (2 * hh),
                (f[1] - 2 * f[0] + f[-1]) / hh ** 2,
                (f[2] - 2 * f[1] + 2 * f[-1] - f[-2]) / (2 * hh ** 3))
    coarse, fine = d(h), d(h / 2)
    return tuple((4 * b - a) / 3 for a, b in zip(coarse, fine))


def third_covariant_derivative_psi(model: AmbientModel, psi, samples, s_values=(0.0,),
                                   derivatives=None):
    """Max component of nabla^3 psi for psi a function of s alone.

    ``derivatives`` may give (psi', psi'', psi''') as callables; otherwise
    they are taken by finite differences of ``psi``.
    """
    worst = 0.0
    for y in samples:
        C = model.connection(y)
        dC = model.frame_derivative(model.connection, y)
        for s in s_values:
            if derivatives is None:
                p1, p2, p3 = _s_derivatives(psi, s)
            else:
                p1, p2, p3 = (float(fn(s)) for fn in derivatives)
            hess = -C[:, :, S] * p1
            hess[S, S] += p2
            # E_a of the Hessian components
            dhess = -dC[:, :, :, S] * p1
            dhess[S] = -C[:, :, S] * p2
            dhess[S, S, S] += p3
            third = dhess - np.einsum("abd,dc->abc", C, hess) - np.einsum("acd,bd->abc", C, hess)
            worst = max(worst, float(np.max(np.abs(third))))
    return worst


def realize(model: AmbientModel, y, t: float = 0.0, s: float = 0.0):
    """Frame vectors of P mapped into R^{2n+2} by (x, s) -> e^s x."""
    chart = model.contact.chart
    A = chart.quadric.A
    E = chart.quadric.flow(t) if t else np.eye(A.shape[0])
    p = np.exp(s) * (E @ chart.chart_point(y))
    lifts = np.exp(s) * (E @ chart.lift_matrix(y))
    return np.column_stack([p, A @ p, lifts])


def reduction_closure(model: AmbientModel, y, h: float = 1e-4):
    """Gaps of the reduction of (P, mu, nabla^1) back to the chart.

    * ``i(d_s) mu - alpha`` at s = 0;
    * mu against Omega' on the realised frame (recovers omega on the U's);
    * realised flat derivatives against the nabla^1 table;
    * Christoffel symbols from reducing nabla^1 against the chart's
      finite-difference Christoffel symbols.
    """
    chart = model.contact.chart
    om = chart.quadric.form
    d = 2 * model.n
    mu = model.mu(y)
    alpha = np.zeros(model.size)
    alpha[XI] = 1.0
    gaps = {"i(ds)mu-alpha": float(np.max(np.abs(mu[S] - alpha)))}

    F = realize(model, y)
    gaps["mu-realised"] = float(np.max(np.abs(F.T @ om @ F - mu)))
    gaps["omega"] = float(np.max(np.abs(F[:, 2:].T @ om @ F[:, 2:] - chart.reduced_form(y))))

    # flat derivatives of the realised frame fields along each frame vector
    J = chart.jacobian(y)
    tau = J.T @ om @ chart.chart_point(y)
    y = np.asarray(y, dtype=float)

    def field(z):
        return realize(model, z[:d], z[d], z[d + 1])

    z0 = np.concatenate([y, [0.0, 0.0]])
    grad = _fd.gradient(field, z0, h)  # [coordinate, component, frame slot]
    dirs = np.zeros((model.size, d + 2))
    dirs[S, d + 1] = 1.0
    dirs[XI, d] = 1.0
    dirs[2:, :d] = np.eye(d)
    dirs[2:, d] = tau
    flat = np.tensordot(dirs, grad, axes=(1, 0))  # [a, component, b]
    coeffs = np.linalg.solve(F, flat.transpose(1, 0, 2).reshape(F.shape[0], -1))
    coeffs = coeffs.reshape(model.size, model.size, model.size).transpose(1, 2, 0)
    gaps["flat-realisation"] = float(np.max(np.abs(coeffs - model.connection(y))))

    # reduce: drop the normal d_s part, add mu(U, V) X to land in the horizontal lift
    C = model.connection(y)
    red = C[2:, 2:, :].copy()
    red[..., S] = 0.0
    red[..., XI] += mu[2:, 2:]
    if np.max(np.abs(red[..., XI])) > 1e-12:
        gaps["vertical-leak"] = float(np.max(np.abs(red[..., XI])))
    Gamma_reduced = np.transpose(red[..., 2:], (2, 0, 1))
    Gamma_fd = chart.christoffel(y, method="fd")
    gaps["Gamma"] = float(np.max(np.abs(Gamma_reduced - Gamma_fd)))
    return gaps
