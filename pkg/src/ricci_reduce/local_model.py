"""Local model of a Ricci-type connection from its invariants at one point.

The generator ``A`` on R^{2n+2} (basis e0, e0', e1..e2n) is assembled from
(rho0, u0, f0), and the reduction around e0 with slice basis e1..e2n gives
back the same invariants at y = 0.  The frame at the point is the identity,
so the comparison map between tangent spaces is the identity in coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core_linalg import SpElement, SymplecticSpace, standard_omega
from .reduction import Quadric, ReductionChart


@dataclass(frozen=True)
class PointInvariants:
    rho0: np.ndarray = field(repr=False)
    u0: np.ndarray = field(repr=False)
    f0: float = 0.0
    tol: float = 1e-10

    def __post_init__(self):
        rho = np.array(self.rho0, dtype=float)
        u = np.array(self.u0, dtype=float)
        d = rho.shape[0]
        if rho.shape != (d, d) or d % 2 or u.shape != (d,):
            raise ValueError("rho0 must be 2n x 2n and u0 of length 2n")
        Om = standard_omega(d // 2)
        S = Om @ rho
        scale = max(1.0, float(np.max(np.abs(rho))))
        if np.max(np.abs(S - S.T)) > self.tol * scale:
            raise ValueError("rho0 is not in sp(R^2n, Omega)")
        if abs(np.trace(rho)) > self.tol * scale:
            raise ValueError("rho0 must be trace free")
        object.__setattr__(self, "rho0", rho)
        object.__setattr__(self, "u0", u)
        object.__setattr__(self, "f0", float(self.f0))

    @property
    def n(self) -> int:
        return self.rho0.shape[0] // 2

    @property
    def K(self) -> float:
        n = self.n
        return float(np.trace(self.rho0 @ self.rho0) + 4.0 * (n + 1) / (2 * n + 1) * self.f0)

    @classmethod
    def from_K(cls, rho0, u0, K: float) -> "PointInvariants":
        rho0 = np.asarray(rho0, dtype=float)
        n = rho0.shape[0] // 2
        f0 = (K - np.trace(rho0 @ rho0)) * (2 * n + 1) / (4.0 * (n + 1))
        return cls(rho0, u0, f0)

    @classmethod
    def random(cls, n: int, rng, scale: float = 1.0) -> "PointInvariants":
        S = rng.standard_normal((2 * n, 2 * n))
        rho = -standard_omega(n) @ (S + S.T) / 2  # Omega^{-1} = -Omega
        return cls(scale * rho, scale * rng.standard_normal(2 * n), scale * rng.standard_normal())


def build_A(inv: PointInvariants) -> SpElement:
    n = inv.n
    c2 = 2.0 * (n + 1) * (2 * n + 1)
    Om = standard_omega(n)
    A = np.zeros((2 * n + 2, 2 * n + 2))
    A[0, 1] = inv.f0 / c2
    A[0, 2:] = -(inv.u0 @ Om) / c2
    A[1, 0] = 1.0
    A[2:, 1] = -inv.u0 / c2
    A[2:, 2:] = -inv.rho0 / (2.0 * (n + 1))
    return SpElement(SymplecticSpace.extended(n), A)


def model_chart(inv: PointInvariants, radius: float | None = None, fd_step: float = 1e-4):
    """Reduction chart at e0 with slice basis e1, ..., e2n."""
    A = build_A(inv)
    d = 2 * inv.n + 2
    x0 = np.zeros(d)
    x0[0] = 1.0
    B = np.eye(d)[:, 2:]
    return ReductionChart.at(A, x0=x0, slice_basis=B, radius=radius, fd_step=fd_step)


def round_trip(inv: PointInvariants):
    """Invariants recovered at y = 0 and their gaps to the input."""
    chart = model_chart(inv)
    got = chart.prop31_invariants(np.zeros(2 * inv.n))
    gaps = {
        "rho": float(np.max(np.abs(got.rho - inv.rho0))),
        "u": float(np.max(np.abs(got.u - inv.u0))),
        "f": float(abs(got.f - inv.f0)),
    }
    return got, gaps


def quadric_of(inv: PointInvariants) -> Quadric:
    return Quadric(build_A(inv))
