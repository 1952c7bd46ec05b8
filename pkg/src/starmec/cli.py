"""Command-line front end: run, validate, compare.

Exit codes: 0 success, 2 infeasibility (task demands or kinematics cannot
be met), 1 any other error. Solver tolerances honor STARMEC_FEASTOL and
STARMEC_RELTOL.
"""

from __future__ import annotations

import argparse
import sys

from .errors import (InfeasibleKinematicsError, QosInfeasibleError,
                     StarMecError)
from .experiments import (SCHEMES, ExperimentSpec, compare_directories,
                          emit_results, run_scheme)
from .optimizer import BcdOptions
from .scenario import load_scenario, validate_scenario

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2


def _parse_sweep(text: str):
    """"M=16,25,36" -> ("M", (16.0, 25.0, 36.0))."""
    var, _, values = text.partition("=")
    if not values:
        raise argparse.ArgumentTypeError(
            "sweep must look like M=16,25,36 or T=8,10,12")
    return var.strip(), tuple(float(v) for v in values.split(","))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="starmec",
        description="Energy-efficiency optimization for a STAR-RIS assisted "
                    "UAV edge-computing network")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve a scenario under one scheme")
    run.add_argument("--config", required=True, help="scenario config file")
    run.add_argument("--scheme", default="proposed", choices=SCHEMES)
    run.add_argument("--sweep", type=_parse_sweep, default=None,
                     metavar="VAR=V1,V2,...",
                     help="grid over M, T or L_k instead of a single run")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", default="results", help="output directory")
    run.add_argument("--jobs", type=int, default=1,
                     help="parallel workers for sweep grid points")
    run.add_argument("--max-bcd-iters", type=int, default=None)

    val = sub.add_parser("validate", help="check a scenario config")
    val.add_argument("--config", required=True)

    cmp_ = sub.add_parser("compare", help="print efficiency deltas between runs")
    cmp_.add_argument("--dir", dest="dirs", action="append", required=True,
                      help="give twice: baseline then candidate")
    return parser


def _cmd_run(args) -> int:
    scenario = load_scenario(args.config)
    problems = validate_scenario(scenario)
    if problems:
        for v in problems:
            print(f"invalid scenario: {v.code}: {v.message}", file=sys.stderr)
        return EXIT_INFEASIBLE
    opts = BcdOptions()
    if args.max_bcd_iters is not None:
        opts.max_bcd_iters = args.max_bcd_iters
    variable, values = args.sweep if args.sweep else ("none", ())
    spec = ExperimentSpec(scenario=scenario, scheme=args.scheme,
                          sweep_variable=variable, sweep_values=values,
                          seed=args.seed, out_dir=args.out, options=opts)
    results = run_scheme(spec, jobs=args.jobs)
    written = emit_results(results, args.out, spec)
    for path in written:
        print(path)
    solved = [r for _, r, _ in results if r is not None]
    if not solved:
        print("all grid points failed", file=sys.stderr)
        return EXIT_INFEASIBLE
    for value, report, err in results:
        label = "" if value is None else f"{variable}={value:g}: "
        if report is None:
            print(f"{label}FAILED: {err}", file=sys.stderr)
        else:
            print(f"{label}EE = {report.energy_efficiency:.6g} bits/J "
                  f"({report.termination}, {len(report.ee_trace) - 1} iterations)")
    return EXIT_OK


def _cmd_validate(args) -> int:
    scenario = load_scenario(args.config)
    problems = validate_scenario(scenario)
    if not problems:
        print("scenario ok")
        return EXIT_OK
    for v in problems:
        print(f"{v.code}: {v.message}")
    return EXIT_INFEASIBLE


def _cmd_compare(args) -> int:
    if len(args.dirs) != 2:
        print("compare needs exactly two --dir arguments", file=sys.stderr)
        return EXIT_ERROR
    for line in compare_directories(args.dirs[0], args.dirs[1]):
        print(line)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "compare":
            return _cmd_compare(args)
        return EXIT_ERROR
    except (QosInfeasibleError, InfeasibleKinematicsError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except StarMecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
