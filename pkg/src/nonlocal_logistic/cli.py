"""Command line entry point.

Exit codes: 0 success, 1 a numerical check failed, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config, parse_profile, write_kernel_table
from .continuation import SeedFailure, branch_continue, newton_solve, seed_solution
from .grid import GridError, read_field_csv, write_field_csv
from .model import InvalidInstanceError
from .nonlocal_term import check_phi_properties
from .potential import check_decay_bound, radial_potential
from .spectral import IterationLimitError, principal_eigenpair
from .verify import MissingFixtureError, run_suite

BRANCH_COLUMNS = ["lambda", "sup_norm", "d12_norm", "identity_residual", "positive"]


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_csv(fh, header: list[str], rows) -> None:
    fh.write(",".join(header) + "\n")
    for row in rows:
        fh.write(",".join(_fmt(float(x)) for x in row) + "\n")


def _emit_csv(args, header, rows) -> None:
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_csv(fh, header, rows)
    else:
        write_csv(sys.stdout, header, rows)


def _emit_json(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _out_dir(args, cfg) -> Path | None:
    d = args.out_dir or cfg.output_dir
    if d is None:
        return None
    d = Path(d)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load_field(path, grid) -> np.ndarray:
    try:
        r, v = read_field_csv(path)
    except ValueError as exc:
        raise ConfigError(f"cannot read field {path}: {exc}") from None
    return np.interp(grid.nodes, r, v, right=0.0)


def _setup(args):
    cfg = load_config(args.config)
    pb = cfg.discretize()
    return cfg, pb


def _eig(pb, cfg):
    return principal_eigenpair(pb, tol=cfg.solver["eig_tol"])


def cmd_eig(args) -> int:
    cfg, pb = _setup(args)
    eig = _eig(pb, cfg)
    out = {
        "lambda1": eig.lambda1,
        "lambda2": eig.lambda2,
        "residual": eig.residual,
        "decay_floor": eig.decay_floor,
        "iterations": eig.iterations,
        "grid": cfg.grid,
    }
    exact = cfg.problem.lambda1_exact
    if exact is not None:
        out["lambda1_exact"] = exact
        out["rel_error"] = abs(eig.lambda1 - exact) / exact
    d = _out_dir(args, cfg)
    if d is not None:
        write_field_csv(d / "phi1.csv", pb.r, eig.phi1, "phi1")
    _emit_json(out)
    return 0


def cmd_phi(args) -> int:
    cfg, pb = _setup(args)
    if args.field:
        u = _load_field(args.field, pb.grid)
    else:
        u = _eig(pb, cfg).phi1
    phi = pb.nonlocal_op(u)
    if args.kernel_out:
        write_kernel_table(args.kernel_out, pb.r, pb.nonlocal_op.table)
    _emit_csv(args, ["r", "phi"], zip(pb.r, phi))
    if args.check:
        rep = check_phi_properties(pb, [u])
        for name, res in rep.results.items():
            state = "skip" if res.passed is None else ("pass" if res.passed else "fail")
            print(f"{name}: {state} measured={res.measured:.6g} ({res.note})", file=sys.stderr)
        return 0 if rep.ok else 1
    return 0


def cmd_potential(args) -> int:
    cfg, pb = _setup(args)
    if Path(args.F).suffix == ".csv":
        F = _load_field(args.F, pb.grid)
    else:
        try:
            obj = json.loads(args.F)
        except json.JSONDecodeError:
            obj = args.F
        F = parse_profile(obj, {"P": cfg.problem.P, "f": cfg.problem.f})[0](pb.r)
    res = radial_potential(F, pb.grid, P=pb.P)
    ratio, ok = check_decay_bound(res, pb.grid)
    mass = pb.grid.integrate(F)
    out = {
        "decay_constant": res.decay_constant,
        "expected_limit": mass / (pb.grid.omega * (pb.grid.dim - 2)),
        "c0": res.c0,
        "P_mass": res.P_mass,
        "decay_bound_ratio": ratio,
        "decay_bound_ok": ok,
    }
    d = _out_dir(args, cfg)
    if d is not None:
        write_field_csv(d / "potential.csv", pb.r, res.u, "u")
    _emit_json(out)
    return 0 if ok else 1


def cmd_solve(args) -> int:
    cfg, pb = _setup(args)
    eig = _eig(pb, cfg)
    tol = cfg.solver["newton_tol"]
    max_iter = int(cfg.solver["max_iter"])
    if args.seed:
        res = newton_solve(args.lam, _load_field(args.seed, pb.grid), pb, eig, tol=tol, max_iter=max_iter)
    elif args.lam > eig.lambda1:
        res = seed_solution(args.lam, pb, eig, tol=tol, max_iter=max_iter)
    else:
        res = newton_solve(args.lam, eig.phi1, pb, eig, tol=tol, max_iter=max_iter)
    out = {"status": res.status, "lambda": res.lam, "lambda1": eig.lambda1, "iterations": res.iterations,
           "sup_norm": float(np.abs(res.u).max())}
    if res.point is not None:
        out.update(d12_norm=res.point.d12_norm, identity_residual=res.point.identity_residual,
                   positive=res.point.positive)
    d = _out_dir(args, cfg)
    if d is not None:
        write_field_csv(d / "solution.csv", pb.r, res.u, "u")
    _emit_json(out)
    return 0 if res.status in ("converged", "trivial") else 1


def cmd_branch(args) -> int:
    cfg, pb = _setup(args)
    eig = _eig(pb, cfg)
    lam_max = args.lambda_max if args.lambda_max is not None else 2.0 * eig.lambda1
    if lam_max <= eig.lambda1:
        raise UsageError(f"--lambda-max must exceed lambda_1 = {eig.lambda1:.6g}")
    try:
        br = branch_continue(pb, lam_max, amp_max=args.amp_max, ds=args.ds, eig=eig, tol=cfg.solver["newton_tol"])
    except SeedFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _emit_csv(args, BRANCH_COLUMNS, (p.row() for p in br.points))
    if args.snapshots:
        d = _out_dir(args, cfg)
        if d is None:
            raise UsageError("--snapshots needs --out-dir or an output directory in the config")
        for k, p in enumerate(br.points):
            write_field_csv(d / f"branch_{k:04d}.csv", pb.r, p.u, "u")
    print(f"termination: {br.termination}, points: {len(br.points)}", file=sys.stderr)
    return 1 if br.termination in ("stepFailure", "maxSteps") else 0


def cmd_verify(args) -> int:
    configs = None
    if args.config:
        configs = [load_config(p).problem for p in args.config]
    rep = run_suite(configs, args.level)
    text = rep.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
    for line in rep.lines():
        print(line, file=sys.stderr)
    _emit_json({"level": rep.level, "passed": rep.passed,
                "checks": {c.name: c.status for c in rep.checks}})
    return 0 if rep.passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nonlocal-logistic",
                                description="Radial solver for a logistic equation with a nonlocal crowding term.")
    sub = p.add_subparsers(dest="command")

    def common(sp, csv=False):
        sp.add_argument("--config", required=True, help="problem config (JSON)")
        sp.add_argument("--out-dir", help="directory for extra CSV output (overrides config and environment)")
        if csv:
            sp.add_argument("--out", help="write the CSV here instead of stdout")

    sp = sub.add_parser("eig", help="principal eigenpair")
    common(sp)
    sp.set_defaults(func=cmd_eig)

    sp = sub.add_parser("phi", help="evaluate the nonlocal term on a field")
    common(sp, csv=True)
    sp.add_argument("--field", help="CSV field r,value (default: the principal eigenfunction)")
    sp.add_argument("--kernel-out", help="write the discrete kernel table (.npz or .csv)")
    sp.add_argument("--check", action="store_true", help="run the property checks, exit 1 on failure")
    sp.set_defaults(func=cmd_phi)

    sp = sub.add_parser("potential", help="decaying solution of -Lap u = F")
    common(sp)
    sp.add_argument("--F", required=True, help="profile name, JSON profile or CSV file")
    sp.set_defaults(func=cmd_potential)

    sp = sub.add_parser("solve", help="Newton solve at fixed lambda")
    common(sp)
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--seed", help="CSV initial guess (default: scaled eigenfunction)")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("branch", help="continue the positive branch from lambda_1")
    common(sp, csv=True)
    sp.add_argument("--lambda-max", type=float, help="stop at this lambda (default 2 lambda_1)")
    sp.add_argument("--amp-max", type=float, default=float("inf"), help="stop once sup u exceeds this")
    sp.add_argument("--ds", type=float, default=0.05, help="initial arclength step")
    sp.add_argument("--snapshots", action="store_true", help="write every branch point as CSV to the output dir")
    sp.set_defaults(func=cmd_branch)

    sp = sub.add_parser("verify", help="run the verification suite")
    sp.add_argument("--level", choices=["fast", "full"], default="fast")
    sp.add_argument("--out", help="write the full JSON report here")
    sp.add_argument("--config", action="append", help="problem config (repeatable, default: built-in fixtures)")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ConfigError, UsageError, MissingFixtureError, InvalidInstanceError, GridError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IterationLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
