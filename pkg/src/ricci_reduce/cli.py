"""Command-line front end: ``ricci-reduce <subcommand> ...``.

Every subcommand writes a JSON report (to ``--out`` or stdout) listing named
residual checks, and exits with one of the codes below.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import frame_link, induction, local_model, symmetric
from .core_linalg import (SpElement, SymplecticSpace, from_json,
                          random_sp_element, standard_omega, to_json)
from .curvature import RICCI_CONVENTION, curvature_data, curvature_fd, ricci
from .reduction import (ChartDomainError, ReductionChart, SurfaceNotFoundError,
                        find_surface_point, sample_points)
from .ricci_identities import (check_cyclic_nabla_r, check_K, extract_f, extract_u,
                               nabla_omega, reconstruct_curvature, rho_field_from_curvature)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_BAD_JSON = 4
EXIT_DOMAIN = 5

TOL_EXACT = 1e-12
TOL_FD = 1e-5
TOL_ODE = 1e-6

CONVENTIONS = {
    "ricci": RICCI_CONVENTION,
    "bracket": frame_link.BRACKET_CONVENTION,
    "pairing": "Omega'(u, v) = u^T Omega' v; quadric Omega'(x, Ax) = 1",
    "two_forms": "d beta(A, B) = 1/2 (A beta(B) - B beta(A) - beta([A, B])); nu(U_i, U_j) = omega_ij",
}


class ConfigError(Exception):
    pass


class InputFormatError(Exception):
    pass


class Report:
    """Ordered collection of named checks plus free-form data."""

    def __init__(self, command: str, config: dict):
        self.command = command
        self.config = config
        self.checks: dict = {}
        self.data: dict = {}

    def check(self, key, value, tol, value_h2=None, kind="max"):
        """Record a residual; ``kind="min"`` requires value >= tol."""
        value = float(value)
        ok = value <= tol if kind == "max" else value >= tol
        entry = {"value": value, "tol": tol, "kind": kind, "pass": bool(ok)}
        if value_h2 is not None:
            entry["value_h2"] = float(value_h2)
        self.checks[key] = entry

    @property
    def first_failure(self):
        return next((k for k, v in self.checks.items() if not v["pass"]), None)

    def to_dict(self) -> dict:
        fail = self.first_failure
        return {
            "command": self.command,
            "config": self.config,
            "conventions": CONVENTIONS,
            "checks": self.checks,
            "data": self.data,
            "summary": {"pass": fail is None, "first_failure": fail,
                        "n_checks": len(self.checks)},
        }


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def _write(text: str, path):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}: {exc}") from exc


def _read_array(path):
    try:
        return from_json(_read_json(path))
    except ValueError as exc:
        raise InputFormatError(f"{path}: {exc}") from exc


def _load_A(path, n=None) -> SpElement:
    A = _read_array(path)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] % 2:
        raise InputFormatError(f"{path}: expected an even square matrix, got shape {A.shape}")
    m = A.shape[0]
    if n is not None and m != 2 * n + 2:
        raise ConfigError(f"--n {n} does not match a {m}x{m} matrix")
    if m < 6:
        raise ConfigError("the reduced dimension 2n must be at least 4")
    try:
        return SpElement(SymplecticSpace.extended(m // 2 - 1), A)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _threads(args) -> int:
    raw = args.threads if args.threads is not None else os.environ.get("RICCI_REDUCE_THREADS", "1")
    try:
        t = int(raw)
    except ValueError as exc:
        raise ConfigError(f"thread count {raw!r} is not an integer") from exc
    if t < 1:
        raise ConfigError("thread count must be >= 1")
    return t


def pmap(fn, items, threads: int):
    """Ordered map, optionally over a thread pool."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _config(args, **extra) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "threads", "out")}
    cfg.update(extra)
    return cfg


def _validate_common(args):
    if getattr(args, "h", 1.0) <= 0:
        raise ConfigError("--h must be positive")
    if getattr(args, "samples", 1) < 1:
        raise ConfigError("--samples must be >= 1")
    n = getattr(args, "n", None)
    if n is not None and n < 2:
        raise ConfigError("--n must be >= 2")


def _chart(A, radius=None, h=1e-3):
    try:
        return ReductionChart.at(A, radius=radius, fd_step=h)
    except SurfaceNotFoundError as exc:
        raise ChartDomainError(str(exc)) from exc


# -- reduce / verify --------------------------------------------------------


def _gamma(chart, perturb):
    G = chart.christoffel_field()
    return G.perturbed(perturb) if perturb else G


def _reduce_sample(chart, h, perturb=0.0):
    Gamma = _gamma(chart, perturb)

    def run(y):
        om = chart.reduced_form(y)
        out = {}
        for tag, step in (("h", h), ("h2", h / 2)):
            cd = curvature_data(Gamma, y, om, step)
            out[tag] = {
                "W": cd.w_norm,
                "nabla_omega": nabla_omega(Gamma, y, step),
                "rho": float(np.max(np.abs(cd.rho - chart.prop31_invariants(y).rho))),
                "sym": max(cd.symmetry_residuals()),
            }
        out["torsion"] = chart.christoffel(y, return_asymmetry=True)[1]
        inv = chart.prop31_invariants(y)
        out["K"] = inv.K
        out["f"] = inv.f
        return out

    return run


def reduce_checks(report: Report, chart, ys, h, threads, perturb=0.0):
    rows = pmap(_reduce_sample(chart, h, perturb), ys, threads)

    def worst(tag, key):
        return max(r[tag][key] for r in rows)

    report.check("prop31.W", worst("h", "W"), 1e-6, worst("h2", "W"))
    report.check("prop31.torsion", max(r["torsion"] for r in rows), 1e-8)
    report.check("prop31.nabla_omega", worst("h", "nabla_omega"), 1e-6, worst("h2", "nabla_omega"))
    report.check("prop31.rho", worst("h", "rho"), TOL_FD, worst("h2", "rho"))
    report.check("curvature.symmetries", worst("h", "sym"), 1e-8, worst("h2", "sym"))
    report.data["samples"] = [list(y) for y in ys]
    report.data["K"] = [r["K"] for r in rows]
    report.data["f"] = [r["f"] for r in rows]


def _lemma_sample(chart, h, perturb=0.0):
    Gamma = _gamma(chart, perturb)
    rho_fd = rho_field_from_curvature(Gamma, h)

    def u_field(y):
        return chart.prop31_invariants(y).u

    def run(y):
        om = chart.reduced_form(y)
        inv = chart.prop31_invariants(y)
        R = curvature_fd(Gamma, y, h)
        rho = ricci(R, om)[1]
        eq1 = float(np.max(np.abs(reconstruct_curvature(rho, om) - R)))
        u, ures = extract_u(Gamma, rho_fd, y, h)
        f, fres = extract_f(Gamma, inv.rho, u_field, y, h)
        cyc = check_cyclic_nabla_r(Gamma, y, h=h)
        return {"eq1": eq1, "eq2": ures, "u_gap": float(np.max(np.abs(u - inv.u))),
                "eq3": max(fres, abs(f - inv.f)), "cyclic": cyc, "rho": inv.rho, "f": inv.f}

    return run


def lemma_checks(report: Report, chart, ys, h, threads, perturb=0.0):
    rows = pmap(_lemma_sample(chart, h, perturb), ys, threads)
    rows2 = pmap(_lemma_sample(chart, h / 2, perturb), ys, threads)
    for key, tol in (("eq1", 1e-6), ("eq2", 1e-6), ("u_gap", 1e-5), ("eq3", 1e-5),
                     ("cyclic", 1e-5)):
        name = "lemma2.eq2.u" if key == "u_gap" else f"lemma2.{key}"
        report.check(name, max(r[key] for r in rows), tol, max(r[key] for r in rows2))
    if len(rows) >= 2:
        K, spread = check_K([(r["rho"], r["f"]) for r in rows])
        report.check("lemma2.eq4", spread, 1e-5)
        report.data["K_mean"] = K


def cmd_reduce(args, verify=False):
    _validate_common(args)
    A = _load_A(args.A, args.n)
    chart = _chart(A, args.radius, args.h)
    ys = sample_points(chart, args.samples, args.seed)
    report = Report("verify" if verify else "reduce", _config(args, radius_used=chart.radius))
    threads = _threads(args)
    reduce_checks(report, chart, ys, args.h, threads, args.perturb)
    if verify:
        lemma_checks(report, chart, ys, args.h, threads, args.perturb)
    return report


# -- model ------------------------------------------------------------------


def cmd_model(args):
    _validate_common(args)
    rho = _read_array(args.rho)
    u = _read_array(args.u).ravel()
    if (args.f is None) == (args.K is None):
        raise ConfigError("give exactly one of --f and --K")
    if rho.ndim != 2 or rho.shape != (2 * args.n, 2 * args.n) or u.shape != (2 * args.n,):
        raise ConfigError(f"rho must be {2 * args.n}x{2 * args.n} and u of length {2 * args.n}")
    try:
        if args.f is not None:
            inv = local_model.PointInvariants(rho, u, args.f)
        else:
            inv = local_model.PointInvariants.from_K(rho, u, args.K)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    report = Report("model", _config(args))
    got, gaps = local_model.round_trip(inv)
    for key in ("rho", "u", "f"):
        report.check(f"local_model.{key}", gaps[key], 1e-8)
    A = local_model.build_A(inv)
    report.data["A"] = to_json(A.matrix)
    report.data["K"] = inv.K
    report.data["recovered"] = {"rho": got.rho, "u": got.u, "f": got.f}
    return report


# -- link -------------------------------------------------------------------


def cmd_link(args):
    if args.steps < 4:
        raise ConfigError("--steps must be >= 4")
    A = _load_A(args.A)
    chart = _chart(A)
    rng = np.random.default_rng(args.seed)
    if args.curve:
        pts = _read_array(args.curve)
        if pts.ndim != 2 or pts.shape[1] != chart.dim or len(pts) < 2:
            raise InputFormatError(f"curve must be a K x {chart.dim} waypoint array")
        curves = [frame_link.Polyline(pts)]
    else:
        curves = [frame_link.random_curve(chart, rng) for _ in range(args.curves)]
    report = Report("link", _config(args))
    reps = pmap(lambda c: frame_link.link_curve_checks(chart, c, args.steps, np.random.default_rng(args.seed)),
                curves, _threads(args))
    half = pmap(lambda c: frame_link.transport_link(chart, c, args.steps // 2)[0]["drift"],
                curves, _threads(args))

    def worst(key):
        return max(r[key] for r in reps)

    report.check("frame_link.drift", worst("drift"), TOL_FD, max(half))
    report.check("frame_link.symplectic", worst("symplectic_drift"), TOL_ODE)
    report.check("frame_link.atilde", worst("atilde_gap"), TOL_ODE)
    report.check("frame_link.conjugation", worst("conjugation_gap"), TOL_ODE)
    report.check("frame_link.quadric", worst("quadric_residual"), TOL_ODE)
    report.check("frame_link.sigma_aprime", worst("sigma_aprime"), TOL_ODE)
    y0 = curves[0].waypoints[0]
    eps = 0.02
    r1 = frame_link.square_loop(chart, y0, eps)
    r2 = frame_link.square_loop(chart, y0, eps / 2)
    report.check("frame_link.square_loop_decay", r1 / max(r2, 1e-300), 7.0, kind="min")
    report.data["square_loop"] = {"eps": eps, "residual": r1, "residual_half": r2}
    report.data["curves"] = [{"waypoints": c.waypoints, "length": c.length} for c in curves]
    return report


# -- induce -----------------------------------------------------------------


def _induce_sample(chart, h):
    amb = induction.AmbientModel(induction.ContactModel(chart, h))
    amb2 = induction.AmbientModel(induction.ContactModel(chart, h / 2))

    def run(y):
        out = {}
        for tag, model in (("h", amb), ("h2", amb2)):
            fl = induction.flatness_check(model, [y], (0.0, 0.5))
            _, gaps = induction.contact_curvature(model.contact, y)
            out[tag] = {"flat": fl["curvature"], "nabla_mu": fl["nabla_mu"],
                        "RN": max(v for k, v in gaps.items() if k != "antisymmetry")}
            out[tag]["RN_parts"] = gaps
        out["torsion"] = max(induction.contact_connection(amb.contact, y)[1],
                             induction.ambient_connection(amb, y)[1])
        out["affine"] = induction.reeb_affine_residual(amb.contact, y)
        out["psi_e2s"] = induction.third_covariant_derivative_psi(
            amb, lambda s: np.exp(2 * s), [y], (0.0, 0.5))
        out["psi_s"] = induction.third_covariant_derivative_psi(amb, lambda s: s, [y])
        out["closure"] = induction.reduction_closure(amb, y)
        return out

    return run


def cmd_induce(args):
    _validate_common(args)
    A = _load_A(args.A, args.n)
    chart = _chart(A, h=args.h)
    ys = sample_points(chart, args.samples, args.seed)
    rows = pmap(_induce_sample(chart, args.h), ys, _threads(args))
    report = Report("induce", _config(args))

    def worst(key, tag=None):
        return max((r[tag][key] if tag else r[key]) for r in rows)

    report.check("thm6.flat", worst("flat", "h"), TOL_FD, worst("flat", "h2"))
    report.check("thm6.nabla_mu", worst("nabla_mu", "h"), TOL_FD, worst("nabla_mu", "h2"))
    report.check("sec6.torsion", worst("torsion"), 1e-8)
    report.check("sec6.reeb_affine", worst("affine"), 1e-8)
    for part in ("R(U,V)W", "R(U,V)X", "R(U,X)V", "R(U,X)X"):
        report.check(f"sec6.RN.{part}", max(r["h"]["RN_parts"][part] for r in rows), TOL_FD,
                     max(r["h2"]["RN_parts"][part] for r in rows))
    report.check("prop6.psi_e2s", worst("psi_e2s"), TOL_ODE)
    report.check("prop6.psi_s", worst("psi_s"), 1e-2, kind="min")
    report.check("cor6.i_ds_mu", max(r["closure"]["i(ds)mu-alpha"] for r in rows), TOL_EXACT)
    report.check("cor6.omega", max(r["closure"]["omega"] for r in rows), 1e-8)
    report.check("cor6.mu", max(r["closure"]["mu-realised"] for r in rows), 1e-8)
    report.check("cor6.realisation", max(r["closure"]["flat-realisation"] for r in rows), TOL_FD)
    report.check("cor6.Gamma", max(r["closure"]["Gamma"] for r in rows), TOL_ODE)
    report.data["samples"] = [list(y) for y in ys]
    return report


# -- classify ---------------------------------------------------------------


def _load_sp_any(path) -> SpElement:
    """A alone (standard extended form) or {"A": ..., "form": ...}."""
    obj = _read_json(path)
    try:
        if isinstance(obj, dict) and "A" in obj:
            A = from_json(obj["A"])
            form = from_json(obj["form"]) if "form" in obj else None
        else:
            A, form = from_json(obj), None
    except (ValueError, KeyError, TypeError) as exc:
        raise InputFormatError(f"{path}: {exc}") from exc
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] % 2 or A.shape[0] < 6:
        raise ConfigError(f"{path}: expected an even square matrix of size >= 6")
    m = A.shape[0]
    try:
        space = (SymplecticSpace.extended(m // 2 - 1) if form is None
                 else SymplecticSpace(m, form))
        return SpElement(space, A)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def cmd_classify(args):
    if args.tol <= 0:
        raise ConfigError("--tol must be positive")
    A = _load_sp_any(args.A)
    report = Report("classify", _config(args))
    n = A.n
    try:
        case = symmetric.classify(A, args.tol)
    except symmetric.NotSymmetricError as exc:
        report.data["case"] = "NotSymmetric"
        report.data["reason"] = str(exc)
        return report
    report.data["case"] = case.name
    report.data["params"] = case.case_tag.params()
    report.data["lambda"] = case.lam
    report.data["canonical_transform"] = to_json(case.canonical_transform)
    report.data["condition"] = case.condition
    report.check("lemma7.A2", case.residual, args.tol)
    report.check("prop7.canonical", case.transform_residual, 1e-8)
    work = A
    try:
        _, sign = find_surface_point(A)
    except SurfaceNotFoundError:
        sign = 0
    if sign < 0:
        work = -A
    report.data["sigma_sign"] = sign
    if sign:
        alg = symmetric.transvection_algebra(work)
        report.data["dims"] = alg.dims
        report.check("sec7.dim_p", abs(alg.dims["p'"] - 2 * n), 0.0)
        report.check("sec7.g_in_sp", alg.residuals["sp"], 1e-10)
        report.check("sec7.g_commutes", alg.residuals["commute"], 1e-10)
        report.check("sec7.pp_in_k", alg.residuals["[p,p] in k"], 1e-10)
        report.check("sec7.kp_in_p", alg.residuals["[k,p] in p"], 1e-10)
        chart = ReductionChart.at(work)
        res = symmetric.verify_symmetric_reduction(case, chart, sample_points(chart, 3, args.seed))
        report.check("lemma7.u", res["u"], 1e-8)
        report.check("lemma7.nabla_rho", res["nabla_rho"], TOL_ODE)
        report.check("lemma7.nabla_R", res["nabla_R"], TOL_ODE)
    if isinstance(case.case_tag, symmetric.ZeroLambda):
        rng = np.random.default_rng(args.seed)
        k, r = case.case_tag.rank, case.case_tag.signature
        d0 = 2 * n + 2 - 2 * k
        Om1 = standard_omega(d0 // 2)
        trip = [symmetric.random_triple(r, k - r, d0, rng) for _ in range(3)]
        report.check("sec7.case3_jacobi", symmetric.jacobi_residual(*trip, Om1), TOL_EXACT * 100)
        report.check("sec7.case3_matrix", symmetric.case3_matrix_gap(trip[0], trip[1], Om1, r, k - r),
                     TOL_EXACT * 100)
    return report


# -- gen --------------------------------------------------------------------


def cmd_gen(args):
    if args.n < 2:
        raise ConfigError("--n must be >= 2")
    A = random_sp_element(args.n, args.seed)
    _, sign = find_surface_point(A)
    if sign < 0:
        A = -A
    return to_json(A.matrix)


# -- entry ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=str, default=None,
                        help="worker threads (fallback: RICCI_REDUCE_THREADS, default 1)")
    common.add_argument("--out", default=None, help="report path (default: stdout)")
    common.add_argument("--seed", type=int, default=0, help="seed for sample points")

    p = argparse.ArgumentParser(prog="ricci-reduce", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    for name in ("reduce", "verify"):
        s = sub.add_parser(name, parents=[common])
        s.add_argument("--A", required=True)
        s.add_argument("--n", type=int, default=None)
        s.add_argument("--samples", type=int, default=20)
        s.add_argument("--h", type=float, default=1e-3)
        s.add_argument("--radius", type=float, default=None)
        s.add_argument("--perturb", type=float, default=0.0,
                       help="add a non-Ricci-type perturbation of this size to Gamma")
        s.set_defaults(func=lambda a, v=(name == "verify"): cmd_reduce(a, verify=v))

    s = sub.add_parser("model", parents=[common])
    s.add_argument("--rho", required=True)
    s.add_argument("--u", required=True)
    s.add_argument("--f", type=float, default=None)
    s.add_argument("--K", type=float, default=None)
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(func=cmd_model)

    s = sub.add_parser("link", parents=[common])
    s.add_argument("--A", required=True)
    s.add_argument("--curve", default=None, help="waypoints JSON; random curves when omitted")
    s.add_argument("--curves", type=int, default=1, help="number of random curves")
    s.add_argument("--steps", type=int, default=200)
    s.set_defaults(func=cmd_link)

    s = sub.add_parser("induce", parents=[common])
    s.add_argument("--A", required=True)
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--samples", type=int, default=20)
    s.add_argument("--h", type=float, default=1e-4)
    s.set_defaults(func=cmd_induce)

    s = sub.add_parser("classify", parents=[common])
    s.add_argument("--A", required=True)
    s.add_argument("--tol", type=float, default=1e-9)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("gen", parents=[common])
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(func=cmd_gen)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    out = getattr(args, "out", None)
    try:
        _threads(args)
        result = args.func(args)
        if isinstance(result, Report):
            payload = result.to_dict()
            _write(dumps(payload), out)
            fail = result.first_failure
            if fail is not None:
                print(f"check failed: {fail}", file=sys.stderr)
                return EXIT_CHECK_FAILED
            return EXIT_OK
        _write(dumps(result), out)
        return EXIT_OK
    except ConfigError as exc:
        return _error(f"config error: {exc}", EXIT_CONFIG, args, out)
    except InputFormatError as exc:
        return _error(f"malformed JSON: {exc}", EXIT_BAD_JSON, args, out)
    except OSError as exc:
        return _error(f"I/O error: {exc}", EXIT_IO, args, None)
    except (ChartDomainError, np.linalg.LinAlgError) as exc:
        return _error(f"domain error: {exc}", EXIT_DOMAIN, args, out)


def _error(msg, code, args, out) -> int:
    print(msg, file=sys.stderr)
    if out:
        try:
            _write(dumps({"command": args.command, "error": msg, "exit_code": code}), out)
        except OSError:
            pass
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
