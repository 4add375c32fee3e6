"""Frame-level link between a reduced chart and the quadric it came from.

Along a curve gamma in the chart three objects are integrated with fixed-step
RK4: the horizontal lift y(t) on the quadric (through its flow time tau), a
parallel symplectic frame xi(t), and the matrix ODE C' = C alpha(gamma').
C(t) should coincide with the matrix with columns (y, Ay, lifts of xi).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .core_linalg import extended_omega, standard_omega
from .reduction import ReductionChart, sample_points

BRACKET_CONVENTION = "[a, b] = ab - ba; dA~/dt = -[alpha(gamma'), A~]; C' = C alpha(gamma')"


def a_matrix(rho, u, f):
    """Generator on R^{2n+2} built from invariants expressed in a symplectic frame."""
    rho = np.asarray(rho, dtype=float)
    n = rho.shape[0] // 2
    c2 = 2.0 * (n + 1) * (2 * n + 1)
    Om = standard_omega(n)
    A = np.zeros((2 * n + 2, 2 * n + 2))
    A[0, 1] = f / c2
    A[0, 2:] = -(u @ Om) / c2
    A[1, 0] = 1.0
    A[2:, 1] = -np.asarray(u) / c2
    A[2:, 2:] = -rho / (2.0 * (n + 1))
    return A


def frame_invariants(rho, u, xi):
    """(xi^{-1} rho xi, xi^{-1} u)."""
    return np.linalg.solve(xi, rho @ xi), np.linalg.solve(xi, u)


def atilde(rho, u, f, xi=None):
    if xi is not None:
        rho, u = frame_invariants(rho, u, xi)
    return a_matrix(rho, u, f)


@dataclass(frozen=True)
class AlphaEvaluation:
    point: np.ndarray
    direction: np.ndarray
    value: np.ndarray = field(repr=False)


def alpha_matrix(rho, u, omega, X, xi=None):
    """sp(R^{2n+2})-valued 1-form evaluated on the horizontal lift of X at frame xi."""
    rho = np.asarray(rho, dtype=float)
    X = np.asarray(X, dtype=float)
    d = rho.shape[0]
    n = d // 2
    c2 = 2.0 * (n + 1) * (2 * n + 1)
    xi = np.eye(d) if xi is None else xi
    Xt = np.linalg.solve(xi, X)
    rXt = np.linalg.solve(xi, rho @ X)
    Om = standard_omega(n)
    a = np.zeros((d + 2, d + 2))
    a[0, 1] = -float(u @ omega @ X) / c2
    a[0, 2:] = -(rXt @ Om) / (2.0 * (n + 1))
    a[1, 2:] = -(Xt @ Om)
    a[2:, 0] = Xt
    a[2:, 1] = -rXt / (2.0 * (n + 1))
    return a


def eval_alpha(chart: ReductionChart, y, X, xi=None) -> AlphaEvaluation:
    inv = chart.prop31_invariants(y)
    return AlphaEvaluation(np.asarray(y, dtype=float), np.asarray(X, dtype=float),
                           alpha_matrix(inv.rho, inv.u, chart.reduced_form(y), X, xi))


def jtilde(h):
    """Sp(2n) -> Sp(2n+2), h -> diag(I_2, h)."""
    d = h.shape[0]
    out = np.eye(d + 2)
    out[2:, 2:] = h
    return out


def darboux_frame(omega):
    """Columns xi with xi^T omega xi = standard form (symplectic Gram-Schmidt)."""
    omega = np.asarray(omega, dtype=float)
    d = omega.shape[0]
    n = d // 2
    pool = list(np.eye(d))
    es, fs = [], []

    def project(v):
        for e, f in zip(es, fs):
            v = v - (v @ omega @ f) * e + (v @ omega @ e) * f
        return v

    while len(es) < n:
        v = project(pool.pop(0))
        best = None
        for k, w in enumerate(pool):
            w = project(w)
            pair = v @ omega @ w
            if best is None or abs(pair) > abs(best[1]):
                best = (k, pair, w)
        k, pair, w = best
        if abs(pair) < 1e-12:
            continue
        pool.pop(k)
        es.append(v)
        fs.append(w / pair)
    return np.column_stack(es + fs)


class Polyline:
    """Piecewise-linear curve in chart coordinates; parameter runs over [0, segments]."""

    def __init__(self, waypoints):
        self.waypoints = np.atleast_2d(np.asarray(waypoints, dtype=float))
        if len(self.waypoints) < 1:
            raise ValueError("curve needs at least one waypoint")

    @property
    def segments(self):
        return [(a, b) for a, b in zip(self.waypoints[:-1], self.waypoints[1:])]

    @property
    def length(self) -> float:
        return float(sum(np.linalg.norm(b - a) for a, b in self.segments))


def _rk4_segment(rhs, state, a, b, steps):
    """Integrate over the straight segment a -> b (parameter in [0, 1])."""
    vel = b - a
    dt = 1.0 / steps
    out = [state]
    for k in range(steps):
        t = k * dt
        k1 = rhs(a + t * vel, vel, state)
        k2 = rhs(a + (t + dt / 2) * vel, vel, [s + dt / 2 * q for s, q in zip(state, k1)])
        k3 = rhs(a + (t + dt / 2) * vel, vel, [s + dt / 2 * q for s, q in zip(state, k2)])
        k4 = rhs(a + (t + dt) * vel, vel, [s + dt * q for s, q in zip(state, k3)])
        state = [s + dt / 6 * (q1 + 2 * q2 + 2 * q3 + q4)
                 for s, q1, q2, q3, q4 in zip(state, k1, k2, k3, k4)]
        out.append(state)
    return out


@dataclass
class Transport:
    """Output of :func:`integrate_transport`: samples along the curve."""

    points: list
    tau: list
    xi: list
    C: list
    M: list


def integrate_transport(chart: ReductionChart, curve: Polyline, steps: int = 200, xi0=None):
    """RK4 for (tau, xi, C, M) along ``curve``.

    ``steps`` is the total step count, shared between segments in proportion
    to their length.  M solves M' = -[alpha, M] from A~ at the start.
    """
    om, A = chart.quadric.form, chart.quadric.A
    start = curve.waypoints[0]
    if xi0 is None:
        xi0 = darboux_frame(chart.reduced_form(start))
    inv0 = chart.prop31_invariants(start)
    x0 = chart.chart_point(start)
    C0 = np.column_stack([x0, A @ x0, chart.lift_matrix(start) @ xi0])
    M0 = atilde(inv0.rho, inv0.u, inv0.f, xi0)

    def rhs(g, vel, state):
        tau, xi, C, M = state
        J = chart.jacobian(g)
        x = chart.chart_point(g)
        G = chart.christoffel(g)
        inv = chart.prop31_invariants(g)
        a = alpha_matrix(inv.rho, inv.u, chart.reduced_form(g), vel, xi)
        return [
            np.float64((J @ vel) @ om @ x),
            -np.einsum("kij,i,ja->ka", G, vel, xi),
            C @ a,
            -(a @ M - M @ a),
        ]

    total = curve.length
    state = [np.float64(0.0), np.array(xi0, dtype=float), C0, M0]
    points, taus, xis, Cs, Ms = [start], [state[0]], [state[1]], [C0], [M0]
    for a, b in curve.segments:
        seg_len = np.linalg.norm(b - a)
        if seg_len == 0:
            continue
        n_steps = max(1, int(round(steps * seg_len / total)))
        traj = _rk4_segment(rhs, state, a, b, n_steps)
        for k, st in enumerate(traj[1:], start=1):
            points.append(a + (k / n_steps) * (b - a))
            taus.append(st[0])
            xis.append(st[1])
            Cs.append(st[2])
            Ms.append(st[3])
        state = traj[-1]
    return Transport(points, taus, xis, Cs, Ms)


def direct_frame_matrix(chart: ReductionChart, g, tau, xi):
    """(y, Ay, lifts of xi) at the point over ``g`` with flow time ``tau``."""
    A = chart.quadric.A
    E = scipy.linalg.expm(tau * A)
    y = E @ chart.chart_point(g)
    return np.column_stack([y, A @ y, E @ chart.lift_matrix(g) @ xi])


def transport_link(chart: ReductionChart, curve: Polyline, steps: int = 200):
    """Drift report comparing C(t) with the directly assembled frame matrix."""
    om, A = chart.quadric.form, chart.quadric.A
    tr = integrate_transport(chart, curve, steps)
    d = chart.dim
    ext = extended_omega(d // 2)
    drift = sympl = quad = conj = 0.0
    for g, tau, xi, C in zip(tr.points, tr.tau, tr.xi, tr.C):
        D = direct_frame_matrix(chart, g, tau, xi)
        drift = max(drift, float(np.max(np.abs(C - D))))
        sympl = max(sympl, float(np.max(np.abs(C.T @ om @ C - ext))))
        y = D[:, 0]
        quad = max(quad, abs(float(y @ om @ (A @ y)) - 1.0))
        inv = chart.prop31_invariants(g)
        conj = max(conj, float(np.max(np.abs(np.linalg.solve(C, A @ C)
                                              - atilde(inv.rho, inv.u, inv.f, xi)))))
    return {
        "drift": drift,
        "symplectic_drift": sympl,
        "quadric_residual": quad,
        "conjugation_gap": conj,
        "steps": steps,
        "length": curve.length,
    }, tr


def atilde_transport_gap(chart: ReductionChart, tr: Transport) -> float:
    """max_t |M(t) - A~(gamma(t), xi(t))| for M transported by dA~ = -[alpha, A~]."""
    gap = 0.0
    for g, xi, M in zip(tr.points, tr.xi, tr.M):
        inv = chart.prop31_invariants(g)
        gap = max(gap, float(np.max(np.abs(M - atilde(inv.rho, inv.u, inv.f, xi)))))
    return gap


def square_loop(chart: ReductionChart, y0, eps: float, axes=(0, 1), steps_per_side: int = 40):
    """Residual of the loop holonomy against I - 2 eps^2 omega(e_a, e_b) A~.

    The frame returns rotated by the holonomy h of the reduced connection; the
    comparison uses C(0)^{-1} C(end) jtilde(h)^{-1}, the holonomy of the
    extended connection on Sp(2n+2) frames.
    """
    a, b = axes
    y0 = np.asarray(y0, dtype=float)
    ea = np.zeros_like(y0)
    eb = np.zeros_like(y0)
    ea[a] = eps
    eb[b] = eps
    loop = Polyline([y0, y0 + ea, y0 + ea + eb, y0 + eb, y0])
    tr = integrate_transport(chart, loop, 4 * steps_per_side)
    xi0, xi1 = tr.xi[0], tr.xi[-1]
    h = np.linalg.solve(xi0, xi1)
    C0, C1 = tr.C[0], tr.C[-1]
    hol = np.linalg.solve(C0, C1) @ np.linalg.inv(jtilde(h))
    w = chart.reduced_form(y0)
    At = np.linalg.solve(C0, chart.quadric.A @ C0)
    expected = np.eye(len(C0)) - 2.0 * eps ** 2 * w[a, b] * At
    return float(np.max(np.abs(hol - expected)))


def sigma_aprime_image(C0, Lambda0, D, At0):
    """z = C0 Lambda0 D^{-1} e0 and |Omega'(z, A'z) - 1| with A' = C0 A~0 C0^{-1}."""
    d = np.asarray(C0).shape[0]
    e0 = np.zeros(d)
    e0[0] = 1.0
    try:
        z = C0 @ Lambda0 @ np.linalg.solve(D, e0)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("D is singular") from exc
    Ap = C0 @ At0 @ np.linalg.inv(C0)
    om = extended_omega(d // 2 - 1)
    return z, abs(float(z @ om @ (Ap @ z)) - 1.0)


def structure_equation_check(chart: ReductionChart, curve: Polyline, eps: float = 0.02,
                             steps: int = 200) -> dict:
    """A~-transport gap along ``curve`` and the square-loop residuals at eps and eps/2."""
    _, tr = transport_link(chart, curve, steps)
    y0 = curve.waypoints[0]
    r1 = square_loop(chart, y0, eps)
    r2 = square_loop(chart, y0, eps / 2)
    return {"atilde_gap": atilde_transport_gap(chart, tr), "loop": r1, "loop_half": r2,
            "loop_ratio": r1 / r2 if r2 > 0 else float("inf")}


def random_curve(chart: ReductionChart, rng, length: float = 0.1, pieces: int = 2) -> Polyline:
    """Polyline of ``pieces`` random straight pieces with total ``length``."""
    start = sample_points(chart, 1, int(rng.integers(2 ** 31)), 0.3)[0]
    pts = [start]
    for _ in range(pieces):
        d = rng.standard_normal(chart.dim)
        pts.append(pts[-1] + d / np.linalg.norm(d) * length / pieces)
    return Polyline(pts)


def random_symplectic(m: int, rng, scale: float = 0.3) -> np.ndarray:
    """expm of a random element of sp for the extended form on R^m."""
    form = extended_omega(m // 2 - 1)
    S = rng.standard_normal((m, m))
    return scipy.linalg.expm(scale * np.linalg.solve(form, S + S.T))


def link_curve_checks(chart: ReductionChart, curve: Polyline, steps: int, rng) -> dict:
    """:func:`transport_link` report plus the A~ transport gap and the Sigma_A' residual.

    D(t) = C(t)^{-1} C(0) Lambda0 for a random symplectic Lambda0.
    """
    rep, tr = transport_link(chart, curve, steps)
    Lambda0 = random_symplectic(chart.dim + 2, rng)
    C0 = tr.C[0]
    At0 = np.linalg.solve(C0, chart.quadric.A @ C0)
    sig = 0.0
    for C in tr.C:
        D = np.linalg.solve(C, C0 @ Lambda0)
        sig = max(sig, sigma_aprime_image(C0, Lambda0, D, At0)[1])
    rep["atilde_gap"] = atilde_transport_gap(chart, tr)
    rep["sigma_aprime"] = sig
    return rep
