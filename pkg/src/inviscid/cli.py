"""Command-line interface.

Subcommand groups: `beta`, `psi`, `admissible` (profile calculus),
`rate` (theoretical bounds), `sim` (single solver runs), and `sweep`
(viscosity-sweep experiments).  Every invocation that computes a single
result prints one JSON object on standard output; `rate table` prints
CSV rows.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .admissibility import (
    BetaContext,
    GeometricCutoffs,
    check_admissible,
    eval_beta,
    eval_psi,
)
from .config import build_sim_config, build_sweep_config, parse_flat_config, parse_theta_spec
from .errors import DomainError
from .harness import run_sweep, read_records_csv, emit_report
from .osgood import RateBound, theoretical_l2_bound
from .spectral import diagnostics_csv_lines, run, write_snapshot


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _theta_args(parser, with_m: bool = True) -> None:
    parser.add_argument("--theta", required=True, help="const:C | iterlog:m | pow:a | table:PATH")
    parser.add_argument("--p0", type=float, default=None, help="domain start (default per profile)")
    if with_m:
        parser.add_argument("--M", type=float, default=1.0, help="sup-norm bound")


def _cmd_beta_eval(args) -> None:
    theta = parse_theta_spec(args.theta, p0=args.p0)
    ctx = BetaContext(M=args.M, theta=theta)
    _emit(
        {
            "M": args.M,
            "theta": args.theta,
            "p0": ctx.p0,
            "x": args.x,
            "beta": eval_beta(ctx, args.x),
        }
    )


def _cmd_psi_eval(args) -> None:
    theta = parse_theta_spec(args.theta, p0=args.p0)
    _emit({"theta": args.theta, "p0": theta.p0, "x": args.x, "psi": eval_psi(theta, args.x)})


def _cmd_admissible_check(args) -> None:
    theta = parse_theta_spec(args.theta, p0=args.p0)
    ctx = BetaContext(M=args.M, theta=theta)
    cutoffs = None
    if args.decades is not None:
        cutoffs = GeometricCutoffs(delta0=0.1, ratio=0.1, count=args.decades)
    verdict = check_admissible(ctx, cutoffs=cutoffs)
    _emit(
        {
            "theta": args.theta,
            "M": args.M,
            "p0": ctx.p0,
            "verdict": verdict.verdict.value,
            "growth_per_decade": verdict.growth_per_decade,
            "partial_integrals": [list(p) for p in verdict.partial_integrals],
            "cutoff_log10": list(verdict.cutoff_log10),
            "note": "numerical heuristic, not a proof",
        }
    )


def _rate_bound_from_args(args) -> RateBound:
    theta = parse_theta_spec(args.theta, p0=args.p0)
    ctx = BetaContext(M=args.M, theta=theta)
    return RateBound(beta_ctx=ctx, T=args.T, R=args.R)


def _cmd_rate_bound(args) -> None:
    rb = _rate_bound_from_args(args)
    t = args.t if args.t is not None else args.T
    _emit({"nu": args.nu, "t": t, "bound": theoretical_l2_bound(rb, args.nu, t)})


def _cmd_rate_table(args) -> None:
    rb = _rate_bound_from_args(args)
    nus = [float(v) for v in args.nu_list.split(",")]
    ts = [float(v) for v in args.t_list.split(",")] if args.t_list else [args.T]
    print("nu,t,bound")
    for nu in nus:
        for t in ts:
            print(f"{nu:.17g},{t:.17g},{theoretical_l2_bound(rb, nu, t):.17g}")


def _cmd_sim_run(args) -> None:
    entries = parse_flat_config(args.config)
    cfg, output_dir = build_sim_config(entries)
    result = run(cfg)
    out = {
        "records": len(result.diagnostics),
        "final_time": result.diagnostics[-1].t,
        "energy_final": result.diagnostics[-1].energy,
        "max_vel_final": result.diagnostics[-1].max_vel,
    }
    if output_dir:
        os.makedirs(output_dir, exist_ok=True)
        diag_path = os.path.join(output_dir, "diagnostics.csv")
        tmp = diag_path + ".tmp"
        with open(tmp, "w") as fh:
            fh.write("\n".join(diagnostics_csv_lines(result.diagnostics)) + "\n")
        os.replace(tmp, diag_path)
        for t, snap in result.snapshots:
            write_snapshot(
                os.path.join(output_dir, f"snap_t{t:.6f}.bin"),
                snap,
                {"t": t, "nu": cfg.nu},
            )
        out["output_dir"] = output_dir
    _emit(out)


def _cmd_sweep_run(args) -> None:
    cfg = build_sweep_config(parse_flat_config(args.config))
    result = run_sweep(cfg)
    _emit(
        {
            "output_dir": cfg.output_dir,
            "records": len(result.records),
            "alpha_hat": result.summary["alpha_hat"],
            "monotone_sup": result.summary["monotone_sup"],
            "bound_satisfied_by_C": result.summary["bound_satisfied_by_C"],
            "smallest_sufficient_C": result.summary["smallest_sufficient_C"],
        }
    )


def _cmd_sweep_report(args) -> None:
    records = read_records_csv(os.path.join(args.dir, "records.csv"))
    with open(os.path.join(args.dir, "summary.json")) as fh:
        summary = json.load(fh)
    written = emit_report(records, summary, args.format, args.dir)
    _emit({"written": written})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inviscid",
        description="Vorticity growth-profile calculus and zero-viscosity convergence experiments",
    )
    groups = parser.add_subparsers(dest="group", required=True)

    beta = groups.add_parser("beta", help="interpolation function beta").add_subparsers(
        dest="action", required=True
    )
    p = beta.add_parser("eval", help="evaluate beta(x)")
    _theta_args(p)
    p.add_argument("--x", type=float, required=True)
    p.set_defaults(func=_cmd_beta_eval)

    psi = groups.add_parser("psi", help="interpolation function psi").add_subparsers(
        dest="action", required=True
    )
    p = psi.add_parser("eval", help="evaluate psi(x)")
    _theta_args(p, with_m=False)
    p.add_argument("--x", type=float, required=True)
    p.set_defaults(func=_cmd_psi_eval)

    adm = groups.add_parser("admissible", help="divergence classifier").add_subparsers(
        dest="action", required=True
    )
    p = adm.add_parser("check", help="grade the divergence of 1/beta at 0")
    _theta_args(p)
    p.add_argument(
        "--decades",
        type=int,
        default=None,
        help="use a decade ladder with this many cutoffs instead of the default deep ladder",
    )
    p.set_defaults(func=_cmd_admissible_check)

    rate = groups.add_parser("rate", help="theoretical convergence bounds").add_subparsers(
        dest="action", required=True
    )
    p = rate.add_parser("bound", help="bound at one (nu, t)")
    _theta_args(p)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--t", type=float, default=None)
    p.set_defaults(func=_cmd_rate_bound)
    p = rate.add_parser("table", help="CSV of bounds over nu (and t) lists")
    _theta_args(p)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--nu-list", required=True)
    p.add_argument("--t-list", default=None)
    p.set_defaults(func=_cmd_rate_table)

    sim = groups.add_parser("sim", help="single solver run").add_subparsers(
        dest="action", required=True
    )
    p = sim.add_parser("run", help="run one simulation from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_sim_run)

    sweep = groups.add_parser("sweep", help="viscosity sweep").add_subparsers(
        dest="action", required=True
    )
    p = sweep.add_parser("run", help="run a sweep from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_sweep_run)
    p = sweep.add_parser("report", help="re-emit persisted sweep results")
    p.add_argument("--dir", required=True)
    p.add_argument("--format", choices=("csv", "json", "plot"), required=True)
    p.set_defaults(func=_cmd_sweep_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except DomainError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
