"""Command-line front end.

    pnf check      SYSTEM            divisor scan and hypotheses
    pnf constants  SYSTEM            constants of the remainder estimate
    pnf uncouple   SYSTEM --delta D  periodic graph map and its remainder
    pnf normalize  SYSTEM --delta D  normal form and its remainder
    pnf sweep      SYSTEM --delta-list D1,D2,...
    pnf verify     SYSTEM            oracle, identities and dynamics checks

SYSTEM is a JSON file or the name of a bundled fixture.  Exit status is 0 on
success, 1 on bad input, 2 when a hypothesis fails and 3 when a numerical
tolerance is missed.
"""
from __future__ import annotations

import argparse
import math
import sys as _sys
from pathlib import Path

from . import fixtures
from .algebra import max_rel_diff
from .homological import resonant_monomials
from .io import load_system, polymap_record, write_csv, write_json
from .spectrum import HypothesisViolation, check_nonresonance, constants_graph, constants_normal, eigen_data
from .system import SystemSpec

EXIT_OK, EXIT_INPUT, EXIT_HYPOTHESIS, EXIT_TOLERANCE = 0, 1, 2, 3
ORACLE_TOL = 1e-10
COMMANDS = ("check", "uncouple", "normalize", "sweep", "verify", "constants")


class ToleranceFailure(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(_sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> float:
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return x


def _delta_list(text: str) -> list[float]:
    return [_positive(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="pnf", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("system", help="system JSON file or bundled fixture name")
    ap.add_argument("--delta", type=_positive, default=0.05)
    ap.add_argument("--delta-list", type=_delta_list, default=None)
    ap.add_argument("--p", type=int, default=None, help="degree override")
    ap.add_argument("--dmax", type=int, default=None, help="truncation degree of the remainder")
    ap.add_argument("--tau", type=float, default=None)
    ap.add_argument("--tol-res", type=float, default=None)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("."))
    ap.add_argument("--path", choices=("graph", "normal"), default=None,
                    help="invariant manifold (graph) or normal form (normal); inferred by default")
    return ap


def ingest(name: str) -> SystemSpec:
    p = Path(name)
    if p.exists():
        return load_system(p)
    if name in fixtures.BUILDERS:
        return fixtures.bundled(name)
    raise FileNotFoundError(f"no such file or bundled fixture: {name}")


def default_path(sys: SystemSpec) -> str:
    return "graph" if sys.m0 and sys.m1 else "normal"


def system_summary(sys: SystemSpec) -> dict:
    return {"name": sys.name, "T": sys.period, "m0": sys.m0, "m1": sys.m1, "deg_V": sys.deg_V,
            "fourier_support": sys.V.kmax, "c": sys.c, "rho": sys.rho, "ell": sys.ell}


def _nonres_dict(nr) -> dict:
    return {"path": nr.path, "tau": nr.tau, "gamma_eff": nr.gamma_eff, "worst": nr.worst,
            "resonant_set": nr.resonant, "near_resonant": nr.near_resonant,
            "scanned": nr.scanned, "degree_range": nr.degree_range,
            "fourier_max": nr.fourier_max, "tol_res": nr.tol_res}


def _phi2(phi) -> list[dict]:
    return polymap_record(phi.part(2))["terms"] if 2 in phi.degrees() else []


def cmd_check(sys: SystemSpec, args) -> dict:
    path = args.path or default_path(sys)
    deg = args.p or 10
    eig = eigen_data(sys)
    nr = check_nonresonance(sys, args.tau, deg, deg * sys.V.kmax, path, args.tol_res, eig=eig)
    return {"command": "check", "system": system_summary(sys), "K_needed": deg * sys.V.kmax,
            "Lambda": eig.Lambda, "nu": eig.nu, "nonresonance": _nonres_dict(nr)}


def cmd_constants(sys: SystemSpec, args) -> dict:
    path = args.path or default_path(sys)
    deg = args.p or 10
    eig = eigen_data(sys)
    nr = check_nonresonance(sys, args.tau, deg, deg * sys.V.kmax, path, args.tol_res, eig=eig)
    build = constants_graph if path == "graph" else constants_normal
    rep = build(sys, nr.gamma_eff, args.tau, eig)
    return {"command": "constants", "system": system_summary(sys), "constants": rep.to_dict(),
            "nonresonance": _nonres_dict(nr), "delta": args.delta,
            "p_opt": rep.p_opt(args.delta), "in_range": rep.in_range(args.delta),
            "remainder_bound": rep.remainder_bound(args.delta)}


def cmd_uncouple(sys: SystemSpec, args) -> tuple[dict, dict]:
    from .uncouple import uncouple

    r = uncouple(sys, args.delta, args.p, args.dmax, args.tau, args.tol_res)
    report = {
        "command": "uncouple", "system": system_summary(sys), "delta": r.delta, "p": r.p,
        "p_opt": r.p_opt, "in_range": r.in_range, "constants": r.constants.to_dict(),
        "nonresonance": _nonres_dict(r.nonresonance), "D_max": r.D_max,
        "identity_residual": r.identity_residual, "solve_residuals": r.solve_residuals,
        "certified_bound": r.certified_bound, "paper_bound": r.estimate,
        "phi_norms": r.phi_norms, "gevrey_envelope": r.gevrey, "phi_2": _phi2(r.phi),
    }
    return report, {"phi": r.phi, "R": r.R}


def cmd_normalize(sys: SystemSpec, args) -> tuple[dict, dict]:
    from .normalform import normal_form_norms, normalize

    r = normalize(sys, args.delta, args.p, args.dmax, args.tau, args.tol_res)
    report = {
        "command": "normalize", "system": system_summary(sys), "delta": r.delta, "p": r.p,
        "p_opt": r.p_opt, "in_range": r.constants.in_range(r.delta),
        "constants": r.constants.to_dict(), "nonresonance": _nonres_dict(r.nonresonance),
        "D_max": r.D_max, "neumann_residual": r.neumann_residual,
        "conjugacy_residual": r.conjugacy_residual, "solve_residuals": r.solve_residuals,
        "kernel_residual": r.kernel_residual, "certified_bound": r.certified_bound,
        "paper_bound": r.estimate, "N_norms": normal_form_norms(r.N, sys.ell),
        "warnings": r.warnings,
    }
    return report, {"phi": r.phi, "N": r.N, "R": r.R}


SWEEP_COLUMNS = ["delta", "p_opt", "certified_bound", "sampled_sup", "paper_bound", "p", "in_range"]


def cmd_sweep(sys: SystemSpec, args) -> tuple[dict, list]:
    from .verify import delta_sweep

    deltas = args.delta_list or [0.2, 0.1, 0.05, 0.025]
    path = args.path or default_path(sys)
    sw = delta_sweep(sys, deltas, path, args.seed, p=args.p)
    rows = [[r.delta, r.p_opt, r.certified_bound, r.sampled_sup, r.estimate, r.p,
             int(r.in_range)] for r in sw.rows]
    bad = [r.delta for r in sw.rows if r.sampled_sup > r.certified_bound * (1 + 1e-12)]
    report = {"command": "sweep", "system": system_summary(sys), "path": path, "rows": sw.rows,
              "b": sw.b, "omega": sw.omega, "delta0": sw.delta0, "slope": sw.slope,
              "slope_ok": bool(sw.slope <= -sw.omega / 2) if not math.isnan(sw.slope) else None,
              "sampled_exceeds_certified": bad}
    if bad:
        raise ToleranceFailure(f"sampled sup above the certified bound at delta = {bad}")
    return report, rows


def cmd_verify(sys: SystemSpec, args) -> dict:
    from .normalform import build_phi_N, check_criteria, normalize
    from .uncouple import build_phi, uncouple
    from .verify import manifold_drift, oracle_solve, pushforward_gap

    path = args.path or default_path(sys)
    p = min(args.p or 3, 3)
    out: dict = {"command": "verify", "system": system_summary(sys), "path": path, "p_oracle": p}
    failures = []
    o = oracle_solve(sys, p, path)
    if path == "graph":
        diff = max_rel_diff(o.phi, build_phi(sys, p))
        out["oracle"] = {"phi_diff": diff, "residual": o.residual, "unknowns": o.unknowns}
        r = uncouple(sys, args.delta, args.p, args.dmax, args.tau, args.tol_res)
        d = manifold_drift(sys, args.delta, r.p, seed=args.seed)
        d0 = manifold_drift(sys, args.delta, r.p, seed=args.seed, zero_remainder=True)
        out["identity_residual"] = r.identity_residual
        out["drift"] = d
        out["drift_zero_remainder"] = d0.max_v1
        out["pushforward_gap"] = pushforward_gap(sys, args.delta, r.p, seed=args.seed)
        if not d.left_ball and d.max_v1 > d.allowed:
            failures.append("drift")
        if d0.max_v1 > 1e-8:
            failures.append("drift with zero remainder")
        if r.identity_residual > 1e-10:
            failures.append("identity")
    else:
        b = build_phi_N(sys, p)
        diff = max(max_rel_diff(o.phi, b.phi), max_rel_diff(o.N, b.N))
        counts = {n: len(resonant_monomials(sys, n, p * sys.V.kmax)) for n in range(2, p + 1)}
        out["oracle"] = {"diff": diff, "residual": o.residual, "kernel_dims": o.kernel_dims,
                         "resonant_counts": counts}
        if any(o.kernel_dims[n] != counts[n] for n in counts):
            failures.append("kernel dimension")
        r = normalize(sys, args.delta, args.p, args.dmax, args.tau, args.tol_res)
        crit = check_criteria(r.N, sys.L, seed=args.seed)
        out.update({"neumann_residual": r.neumann_residual,
                    "conjugacy_residual": r.conjugacy_residual,
                    "kernel_residual": r.kernel_residual, "criteria_residual": crit})
        if max(r.neumann_residual, r.conjugacy_residual, r.kernel_residual) > 1e-10:
            failures.append("identity")
        if crit > 1e-9:
            failures.append("criteria")
    if diff > ORACLE_TOL:
        failures.append("oracle")
    out["failures"] = failures
    if failures:
        out["status"] = "tolerance failure"
    return out


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sys = ingest(args.system)
    except (OSError, ValueError, KeyError, TypeError) as e:
        print(f"pnf: cannot read system: {e}", file=_sys.stderr)
        return EXIT_INPUT
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "check":
            report = cmd_check(sys, args)
        elif args.command == "constants":
            report = cmd_constants(sys, args)
        elif args.command == "uncouple":
            report, maps = cmd_uncouple(sys, args)
            write_json(out / "results.json", {"maps": {k: polymap_record(v) for k, v in maps.items()}})
        elif args.command == "normalize":
            report, maps = cmd_normalize(sys, args)
            write_json(out / "results.json", {"maps": {k: polymap_record(v) for k, v in maps.items()}})
        elif args.command == "sweep":
            report, rows = cmd_sweep(sys, args)
            write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)
        else:
            report = cmd_verify(sys, args)
        write_json(out / "report.json", report)
    except HypothesisViolation as e:
        write_json(out / "report.json", {"command": args.command, "status": "hypothesis violation",
                                         "message": str(e), "offending": getattr(e, "offending", None)})
        print(f"pnf: hypothesis violated: {e}", file=_sys.stderr)
        return EXIT_HYPOTHESIS
    except (ArithmeticError, ToleranceFailure) as e:
        write_json(out / "report.json", {"command": args.command, "status": "tolerance failure",
                                         "message": str(e)})
        print(f"pnf: tolerance failure: {e}", file=_sys.stderr)
        return EXIT_TOLERANCE
    if report.get("failures"):
        print(f"pnf: tolerance failure: {', '.join(report['failures'])}", file=_sys.stderr)
        return EXIT_TOLERANCE
    print(f"pnf {args.command}: ok, report in {out / 'report.json'}")
    return EXIT_OK


def main() -> None:
    raise SystemExit(run())
