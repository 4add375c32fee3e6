"""Symplectic vector-space primitives.

Standard forms, sp-membership, curvature-symmetric tensors and the
skewsymmetrisation map on Lambda^p (x) Sym^q.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOL = 1e-12


def set_default_tol(tol: float) -> None:
    """Change the tolerance used for exact-arithmetic identities."""
    global DEFAULT_TOL
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    DEFAULT_TOL = float(tol)


class DimensionError(ValueError):
    pass


def standard_omega(n: int) -> np.ndarray:
    """The form [[0, I_n], [-I_n, 0]] on R^{2n}."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def extended_omega(n: int) -> np.ndarray:
    """Form on R^{2n+2} in the basis {e0, e0', e1, ..., e2n}."""
    om = np.zeros((2 * n + 2, 2 * n + 2))
    om[0, 1] = 1.0
    om[1, 0] = -1.0
    om[2:, 2:] = standard_omega(n)
    return om


def lower(v, form):
    """The 1-form i(v)form as a row vector, i.e. w -> form(v, w)."""
    return np.asarray(v) @ form


@dataclass(frozen=True)
class SymplecticSpace:
    dim: int
    form: np.ndarray = field(repr=False)

    def __post_init__(self):
        form = np.array(self.form, dtype=float)
        if self.dim <= 0 or self.dim % 2:
            raise DimensionError(f"dimension must be even and positive, got {self.dim}")
        if form.shape != (self.dim, self.dim):
            raise DimensionError(f"form has shape {form.shape}, expected {(self.dim, self.dim)}")
        if np.max(np.abs(form + form.T)) > DEFAULT_TOL:
            raise ValueError("symplectic form must be antisymmetric")
        if abs(np.linalg.det(form)) < DEFAULT_TOL:
            raise ValueError("symplectic form must be invertible")
        form.setflags(write=False)
        object.__setattr__(self, "form", form)

    @classmethod
    def standard(cls, n: int) -> "SymplecticSpace":
        return cls(2 * n, standard_omega(n))

    @classmethod
    def extended(cls, n: int) -> "SymplecticSpace":
        """R^{2n+2} with the form [[0,1,0],[-1,0,0],[0,0,Omega]]."""
        return cls(2 * n + 2, extended_omega(n))

    @property
    def n(self) -> int:
        return self.dim // 2

    def pair(self, u, v):
        return np.asarray(u) @ self.form @ np.asarray(v)


def sp_membership(space: SymplecticSpace, A, tol: float | None = None):
    """Return ``(is_member, residual)`` for ``A`` in sp(space).

    The residual is the max-norm asymmetry of ``form @ A``.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (space.dim, space.dim):
        raise DimensionError(f"matrix of shape {A.shape} does not act on R^{space.dim}")
    tol = DEFAULT_TOL if tol is None else tol
    S = space.form @ A
    residual = float(np.max(np.abs(S - S.T))) if A.size else 0.0
    return residual <= tol * max(1.0, float(np.max(np.abs(A)))), residual


@dataclass(frozen=True)
class SpElement:
    space: SymplecticSpace
    matrix: np.ndarray = field(repr=False)
    tol: float = 1e-10

    def __post_init__(self):
        A = np.array(self.matrix, dtype=float)
        ok, residual = sp_membership(self.space, A, self.tol)
        if not ok:
            raise ValueError(f"matrix is not in sp (residual {residual:.3e})")
        A.setflags(write=False)
        object.__setattr__(self, "matrix", A)

    def __neg__(self):
        return SpElement(self.space, -self.matrix, self.tol)

    @property
    def n(self) -> int:
        """Half the dimension of the *reduced* space, i.e. dim = 2n + 2."""
        return self.space.dim // 2 - 1


def random_sp_element(n: int, seed: int = 0) -> SpElement:
    """A = Omega'^{-1} S for a seeded random symmetric S, scaled to unit Frobenius norm."""
    rng = np.random.default_rng(seed)
    space = SymplecticSpace.extended(n)
    S = rng.standard_normal((space.dim, space.dim))
    A = np.linalg.solve(space.form, S + S.T)
    return SpElement(space, A / np.linalg.norm(A))


def is_symplectic_matrix(S, form) -> float:
    """Max-norm residual of S^T form S - form."""
    S = np.asarray(S)
    return float(np.max(np.abs(S.T @ form @ S - form)))


# -- tensors -----------------------------------------------------------------


@dataclass(frozen=True)
class CovariantTensor:
    """Dense covariant tensor, optionally tagged as an element of Lambda^p (x) Sym^q.

    The first ``p`` slots are antisymmetric and the trailing ``q`` slots are
    symmetric.  Tags are verified on construction when given.
    """

    components: np.ndarray = field(repr=False)
    p: int | None = None
    q: int | None = None
    tol: float = 1e-9

    def __post_init__(self):
        comp = np.array(self.components, dtype=float)
        if len(set(comp.shape)) > 1:
            raise DimensionError("all tensor slots must have the same dimension")
        comp.setflags(write=False)
        object.__setattr__(self, "components", comp)
        if self.p is not None or self.q is not None:
            p = self.p or 0
            q = self.q or 0
            if p + q != comp.ndim:
                raise DimensionError(f"rank {comp.ndim} does not match p + q = {p + q}")
            object.__setattr__(self, "p", p)
            object.__setattr__(self, "q", q)
            defect = symmetry_defect(comp, p)
            scale = max(1.0, float(np.max(np.abs(comp)))) if comp.size else 1.0
            if defect > self.tol * scale:
                raise ValueError(f"declared symmetries violated by {defect:.3e}")

    @property
    def rank(self) -> int:
        return self.components.ndim

    @property
    def dim(self) -> int:
        return self.components.shape[0] if self.rank else 0


def _perm_sign(perm) -> int:
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def symmetry_defect(T: np.ndarray, p: int) -> float:
    """Largest deviation from antisymmetry in slots [0, p) and symmetry in [p, rank)."""
    worst = 0.0
    r = T.ndim
    for a, b in itertools.combinations(range(p), 2):
        worst = max(worst, float(np.max(np.abs(T + np.swapaxes(T, a, b)))))
    for a, b in itertools.combinations(range(p, r), 2):
        worst = max(worst, float(np.max(np.abs(T - np.swapaxes(T, a, b)))))
    return worst


def antisymmetrize(T: np.ndarray, p: int) -> np.ndarray:
    """Alternate the first ``p`` slots, normalised so alternating inputs are fixed."""
    if p <= 1:
        return T.copy()
    rest = list(range(p, T.ndim))
    out = np.zeros_like(T)
    for perm in itertools.permutations(range(p)):
        out += _perm_sign(perm) * np.transpose(T, list(perm) + rest)
    return out / math.factorial(p)


def skew_symmetrize(T: CovariantTensor, p: int, q: int) -> CovariantTensor:
    """The map a: Lambda^p (x) Sym^q -> Lambda^{p+1} (x) Sym^{q-1}.

    Each symmetric slot in turn is moved next to the antisymmetric block and
    the enlarged block is alternated; decomposable tensors give
    ``sum_i u_1 ^ ... ^ u_p ^ v_i (x) v_1 .. v_i^ .. v_q``.  Wedges use the
    determinant normalisation, so (u ^ v)_{ij} = u_i v_j - u_j v_i.
    """
    if q == 0:
        raise DimensionError("skew_symmetrize needs at least one symmetric slot")
    if T.p is None:
        T = CovariantTensor(T.components, p, q)
    elif (T.p, T.q) != (p, q):
        raise DimensionError(f"tensor is tagged ({T.p}, {T.q}), asked for ({p}, {q})")
    comp = T.components
    r = p + q
    out = np.zeros_like(comp)
    for i in range(p, r):
        # bring symmetric slot i to position p, keep the others in order
        order = list(range(p)) + [i] + [k for k in range(p, r) if k != i]
        moved = np.transpose(comp, order)
        out += antisymmetrize(moved, p + 1)
    # alternation above is averaged; rescale to wedge normalisation (p+1)!/(p! 1!)
    out *= math.factorial(p + 1) / math.factorial(p)
    return CovariantTensor(out, p + 1, q - 1)


def check_curvature_symmetries(R) -> tuple[float, float, float]:
    """Max-norm residuals of (i) antisymmetry in slots 1-2, (ii) symmetry in 3-4,
    (iii) the cyclic sum over slots 1-3."""
    R = np.asarray(getattr(R, "components", R), dtype=float)
    if R.ndim != 4:
        raise DimensionError("curvature tensor must have rank 4")
    res1 = float(np.max(np.abs(R + R.transpose(1, 0, 2, 3))))
    res2 = float(np.max(np.abs(R - R.transpose(0, 1, 3, 2))))
    cyc = R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)
    res3 = float(np.max(np.abs(cyc)))
    return res1, res2, res3


# -- json --------------------------------------------------------------------


def to_json(a) -> dict:
    a = np.asarray(a, dtype=float)
    out = {"dim": int(a.shape[0]) if a.ndim else 1, "data": [float(v) for v in a.ravel()]}
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        out["shape"] = list(a.shape)
    return out


def from_json(obj) -> np.ndarray:
    """Decode ``{"dim": m, "data": [...]}``; square m x m unless ``shape`` is given."""
    if isinstance(obj, list):
        return np.array(obj, dtype=float)
    try:
        data = np.array(obj["data"], dtype=float)
        if "shape" in obj:
            return data.reshape(obj["shape"])
        m = int(obj["dim"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed array JSON: {exc}") from exc
    if data.size == m * m:
        return data.reshape(m, m)
    if data.size == m:
        return data
    raise ValueError(f"data of length {data.size} does not fit dim {m}")
