"""Finite-difference curvature and the Ricci / Weyl-type split of symplectic curvature."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _fd
from .core_linalg import DimensionError, check_curvature_symmetries

# r_{ij} = sum_k R^k_{j i k}, i.e. r(X, Y) = tr[Z -> R(X, Z) Y]; fixed against
# the closed-form endomorphism of a Ricci-type connection (see tests).
RICCI_CONVENTION = "r(X,Y) = tr[Z -> R(X,Z)Y], R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y]"


class DimensionTooSmall(DimensionError):
    pass


@dataclass(frozen=True)
class CurvatureData:
    point: np.ndarray
    R_endo: np.ndarray = field(repr=False)  # R[l, k, i, j] = R^l_{kij}
    R_under: np.ndarray = field(repr=False)  # omega(R(e_i, e_j) e_k, e_t) at [i, j, k, t]
    ricci: np.ndarray = field(repr=False)
    rho: np.ndarray = field(repr=False)
    E: np.ndarray = field(repr=False)
    W: np.ndarray = field(repr=False)

    @property
    def w_norm(self) -> float:
        """Max |W| normalised by max(1, max |R|)."""
        return float(np.max(np.abs(self.W)) / max(1.0, float(np.max(np.abs(self.R_under)))))

    def symmetry_residuals(self):
        return check_curvature_symmetries(self.R_under)


def curvature_from_christoffel(G, dG):
    """R^l_{kij} from Gamma[k, i, j] and dG[m, k, i, j] = d_m Gamma^k_{ij}."""
    R = np.einsum("iljk->lkij", dG) - np.einsum("jlik->lkij", dG)
    R += np.einsum("lim,mjk->lkij", G, G) - np.einsum("ljm,mik->lkij", G, G)
    return R


def curvature_fd(Gamma, y, h: float = 1e-4, richardson: bool = True):
    """Curvature endomorphism R[l, k, i, j] of a Christoffel field at ``y``."""
    y = np.asarray(y, dtype=float)
    G = Gamma(y)
    dG = _fd.gradient(Gamma, y, h, richardson)
    return curvature_from_christoffel(G, dG)


def lower_curvature(R, omega):
    """R_under[i, j, k, t] = omega(R(e_i, e_j) e_k, e_t)."""
    return np.einsum("lkij,lt->ijkt", R, omega)


def raise_curvature(R_under, omega):
    """Inverse of :func:`lower_curvature`."""
    omega_inv = np.linalg.inv(omega)
    return np.einsum("ijkt,tl->lkij", R_under, omega_inv)


def ricci(R, omega):
    """Ricci tensor r and endomorphism rho with omega(X, rho Y) = r(X, Y)."""
    r = np.einsum("kjik->ij", R)
    rho = np.linalg.solve(omega, r)
    return r, rho


def E_part(omega, r):
    """The Ricci-determined component of a symplectic curvature tensor."""
    n = omega.shape[0] // 2
    E = (2.0 * np.einsum("xy,zt->xyzt", omega, r)
         + np.einsum("xz,yt->xyzt", omega, r)
         + np.einsum("xt,yz->xyzt", omega, r)
         - np.einsum("yz,xt->xyzt", omega, r)
         - np.einsum("yt,xz->xyzt", omega, r))
    return -E / (2.0 * (n + 1))


def decompose(R_under, omega, r):
    """Split R_under = E + W; W := R_under - E."""
    if omega.shape[0] < 4:
        raise DimensionTooSmall("the E/W split needs dimension 2n >= 4")
    E = E_part(omega, r)
    return E, np.asarray(R_under) - E


def curvature_data(Gamma, y, omega, h: float = 1e-4, richardson: bool = True) -> CurvatureData:
    R = curvature_fd(Gamma, y, h, richardson)
    R_under = lower_curvature(R, omega)
    r, rho = ricci(R, omega)
    E, W = decompose(R_under, omega, r)
    return CurvatureData(np.asarray(y, dtype=float), R, R_under, r, rho, E, W)


def is_ricci_type(Gamma, sample_points, tol: float = 1e-6, omega=None, h: float = 1e-4):
    """Return ``(verdict, worst normalised |W|)`` over the sample points."""
    pts = list(sample_points)
    if not pts:
        raise ValueError("need at least one sample point")
    worst = 0.0
    for y in pts:
        om = Gamma.omega(y) if omega is None else (omega(y) if callable(omega) else omega)
        worst = max(worst, curvature_data(Gamma, y, om, h).w_norm)
    return worst <= tol, worst
