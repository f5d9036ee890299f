"""Command-line front end.

Subcommands
-----------
simulate     run a config, write snapshots + diagnostics + manifest
mms          manufactured-solution order verification
sweep-eps    regularisation sweep against the eps=0 reference
convergence  self-convergence study under h/dt refinement

Exit codes: 0 success; 2 validation or configuration error;
3 solver non-convergence; 4 order/monotonicity regression;
1 unexpected internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .configfile import config_to_dict, load_config
from .errors import NonConvergence, OrderRegression, ValidationError
from .io import (
    write_csv_report,
    write_diagnostics,
    write_manifest,
    write_snapshot,
)
from .mms import mms_verify, solution_preset
from .simulator import convergence_study, run, sweep_epsilon

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2
EXIT_NONCONVERGENCE = 3
EXIT_REGRESSION = 4


def _resolve_output_dir(args, config=None) -> Path:
    if getattr(args, "output_dir", None):
        return Path(args.output_dir)
    env = os.environ.get("CRYOPHASE_OUTPUT_DIR")
    if env:
        return Path(env)
    if config is not None:
        return Path(config.output_dir)
    return Path("cryophase_out")


def _say(args, *message):
    if not getattr(args, "quiet", False):
        print(*message)


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    outdir = _resolve_output_dir(args, config)
    outdir.mkdir(parents=True, exist_ok=True)

    def one_run():
        result = run(config)
        for idx, snap in enumerate(result.snapshots):
            write_snapshot(outdir / f"snapshot_{idx:04d}.csv",
                           snap.theta, snap.beta, snap.xi)
        write_diagnostics(outdir / "diagnostics.csv", result.ledger)
        write_manifest(outdir / "run_manifest.json",
                       config_to_dict(config, str(outdir)),
                       result.wall_time,
                       extra={"label": config.label,
                              "steps": len(result.ledger),
                              "snapshots": len(result.snapshots)})
        return result

    result = one_run()
    _say(args, f"{config.label}: {len(result.ledger)} steps, "
               f"{len(result.snapshots)} snapshots -> {outdir}")
    if args.seed_check:
        reference = (outdir / "diagnostics.csv").read_bytes()
        one_run()
        if (outdir / "diagnostics.csv").read_bytes() != reference:
            print("seed-check FAILED: diagnostics.csv not reproducible",
                  file=sys.stderr)
            return EXIT_INTERNAL
        _say(args, "seed-check passed: diagnostics.csv bitwise reproducible")
    return EXIT_OK


def cmd_mms(args) -> int:
    solution = solution_preset(args.solution)
    report = mms_verify(solution, levels=args.levels)
    print(report.format_table())
    return EXIT_OK


def cmd_sweep_eps(args) -> int:
    config = load_config(args.config)
    try:
        eps_list = [float(tok) for tok in args.eps.split(",") if tok.strip()]
    except ValueError:
        raise ValidationError(f"--eps: cannot parse {args.eps!r} as numbers") \
            from None
    report = sweep_epsilon(config, eps_list)
    outdir = _resolve_output_dir(args, config)
    outdir.mkdir(parents=True, exist_ok=True)
    write_csv_report(outdir / "sweep_report.csv",
                     ("epsilon", "theta_gap", "beta_gap"), report.rows())
    for row in report.rows():
        _say(args, f"eps={row['epsilon']:g}  theta_gap={row['theta_gap']:.6e}  "
                   f"beta_gap={row['beta_gap']:.6e}")
    if not report.monotone:
        print("sweep FAILED: theta gap is not nonincreasing as eps decreases",
              file=sys.stderr)
        return EXIT_REGRESSION
    _say(args, f"report -> {outdir / 'sweep_report.csv'}")
    return EXIT_OK


def cmd_convergence(args) -> int:
    config = load_config(args.config)
    if args.levels < 3:
        raise ValidationError("--levels: need at least 3 refinement levels")
    levels = [2**i for i in range(args.levels)]
    report = convergence_study(config, levels)
    outdir = _resolve_output_dir(args, config)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, mult in enumerate(report.levels[:-1]):
        rows.append({
            "level": mult, "nodes": report.nodes[i], "dt": report.dts[i],
            "theta_diff": report.theta_diffs[i],
            "beta_diff": report.beta_diffs[i],
            "theta_rate": report.theta_rates[i] if i < len(report.theta_rates) else "",
            "beta_rate": report.beta_rates[i] if i < len(report.beta_rates) else "",
        })
    write_csv_report(outdir / "convergence_report.csv",
                     ("level", "nodes", "dt", "theta_diff", "beta_diff",
                      "theta_rate", "beta_rate"), rows)
    for row in rows:
        _say(args, f"x{row['level']}: theta_diff={row['theta_diff']:.6e}")
    finite_rates = [r for r in report.theta_rates if r != float("inf")]
    if finite_rates and min(finite_rates) <= 0:
        print("convergence FAILED: non-positive observed rate", file=sys.stderr)
        return EXIT_REGRESSION
    _say(args, f"report -> {outdir / 'convergence_report.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cryophase",
        description="Constrained phase-field / nonlinear-heat solver "
                    "for helium supercooling studies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one configuration")
    sim.add_argument("config", help="path to a JSON config file")
    sim.add_argument("--output-dir", help="overrides config output.dir "
                     "(falls back to $CRYOPHASE_OUTPUT_DIR)")
    sim.add_argument("--seed-check", action="store_true",
                     help="run twice and verify diagnostics.csv is "
                          "bitwise reproducible")
    sim.add_argument("--quiet", action="store_true")
    sim.set_defaults(fn=cmd_simulate)

    mms = sub.add_parser("mms", help="manufactured-solution order check")
    mms.add_argument("--levels", type=int, default=4)
    mms.add_argument("--solution", default="default",
                     choices=("default", "p2", "zero"))
    mms.add_argument("--quiet", action="store_true")
    mms.set_defaults(fn=cmd_mms)

    swp = sub.add_parser("sweep-eps", help="regularisation sweep vs eps=0")
    swp.add_argument("config")
    swp.add_argument("--eps", required=True,
                     help="comma-separated, strictly decreasing, positive")
    swp.add_argument("--output-dir")
    swp.add_argument("--quiet", action="store_true")
    swp.set_defaults(fn=cmd_sweep_eps)

    conv = sub.add_parser("convergence", help="h/dt self-convergence study")
    conv.add_argument("config")
    conv.add_argument("--levels", type=int, default=4)
    conv.add_argument("--output-dir")
    conv.add_argument("--quiet", action="store_true")
    conv.set_defaults(fn=cmd_convergence)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OrderRegression as exc:
        print(f"order regression: {exc}", file=sys.stderr)
        return EXIT_REGRESSION
    except NonConvergence as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
