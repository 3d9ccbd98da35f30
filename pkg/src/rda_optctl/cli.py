"""Command-line entry point.

Exit codes: 0 success (non-converged runs included, with a warning),
1 usage or I/O error, 2 scenario/validation error, 3 solver abort,
4 a verification check failed.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import kernels
from .errors import ScenarioError, SolverError
from .fbsweep import run_fbs
from .meshgrid import integrate_spacetime
from .report import read_field_csv, slice_name, write_run, write_slice
from .scenario import PRESETS, resolve

EXIT_OK, EXIT_USAGE, EXIT_SCENARIO, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_overrides(p):
    p.add_argument("--nx", type=int)
    p.add_argument("--nt", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--relax", type=float)
    p.add_argument("--B", dest="B", type=float)
    p.add_argument("--M", dest="M", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rda-optctl", description="Optimal resource control for a reaction-diffusion-advection model")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run the forward-backward sweep for one scenario")
    run.add_argument("scenario", help="scenario file or preset:<ID>")
    run.add_argument("--out", required=True, type=Path)
    _add_overrides(run)

    sub.add_parser("presets", help="list the named presets")

    sweep = sub.add_parser("sweep", help="run a scenario over a list of B or M values")
    sweep.add_argument("scenario")
    sweep.add_argument("--param", required=True, choices=["B", "M"])
    sweep.add_argument("--values", required=True, help="comma-separated values")
    sweep.add_argument("--out", required=True, type=Path)
    sweep.add_argument("--jobs", type=int, help="parallel cells (default: $RDA_OPTCTL_JOBS or CPU count)")
    _add_overrides(sweep)

    verify = sub.add_parser("verify", help="run the verification suites")
    verify.add_argument("--suite", default="all", choices=["all", "gradient", "analytic", "invariants"])

    sl = sub.add_parser("slice", help="extract a time slice from a finished run")
    sl.add_argument("run_dir", type=Path)
    sl.add_argument("--t", required=True, type=float)
    sl.add_argument("--field", default="u", choices=["u", "m", "p"])
    return parser


def _overrides(args) -> dict:
    keys = ("nx", "nt", "tol", "max_iters", "relax", "B", "M")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _run_one(scenario, out_dir):
    result = run_fbs(scenario)
    paths = write_run(scenario, result, out_dir, backend=kernels.BACKEND)
    return result, paths


def cmd_run(args) -> int:
    scenario = resolve(args.scenario).with_overrides(**_overrides(args))
    result, paths = _run_one(scenario, args.out)
    if not result.report.converged:
        print(f"warning: {scenario.name}: {result.report.wall_notes}", file=sys.stderr)
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_presets(args) -> int:
    for pid, info in PRESETS.items():
        print(f"{pid.value:<12} {info.description}  [h={info.h}; u0={info.u0}; B={info.B:g}; M={info.M:g}; {info.boundary.value}]")
    return EXIT_OK


def _sweep_cell(payload):
    scenario, out_dir = payload
    result, _ = _run_one(scenario, out_dir)
    rep = result.report
    return {
        "final_J": rep.final_J,
        "mean_m": integrate_spacetime(result.m) / result.m.grid.T,
        "converged": rep.converged,
        "iterations": rep.iterations,
        "notes": rep.wall_notes,
    }


def _jobs(requested):
    if requested is not None:
        return max(1, requested)
    env = os.environ.get("RDA_OPTCTL_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ScenarioError(f"RDA_OPTCTL_JOBS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def cmd_sweep(args) -> int:
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        print(f"rda-optctl: error: --values must be comma-separated numbers, got {args.values!r}", file=sys.stderr)
        return EXIT_USAGE
    if not values:
        print("rda-optctl: error: --values is empty", file=sys.stderr)
        return EXIT_USAGE
    base = resolve(args.scenario).with_overrides(**_overrides(args))
    cells = []
    for v in values:
        s = base.with_overrides(**{args.param: v})
        cells.append((s, args.out / f"{args.param}_{v:g}"))
    jobs = min(_jobs(args.jobs), len(cells))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(c) for c in cells]

    args.out.mkdir(parents=True, exist_ok=True)
    table = args.out / "sweep_table.csv"
    with open(table, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["param", "value", "final_J", "mean_m", "converged", "iterations", "run_dir"])
        for (s, d), v, row in zip(cells, values, rows):
            w.writerow([args.param, f"{v:g}", f"{row['final_J']:.9f}", f"{row['mean_m']:.9f}",
                        str(row["converged"]).lower(), row["iterations"], d.name])
            if not row["converged"]:
                print(f"warning: {args.param}={v:g}: {row['notes']}", file=sys.stderr)
    for _, d in cells:
        print(d)
    print(table)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_suite

    checks = run_suite(args.suite)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed (backend: {kernels.BACKEND})")
    return EXIT_OK if not failed else EXIT_VERIFY


def cmd_slice(args) -> int:
    src = args.run_dir / f"{args.field}.csv"
    field = read_field_csv(src)
    if not 0.0 <= args.t <= field.grid.T * (1 + 1e-12):
        print(f"rda-optctl: error: t={args.t} outside [0, {field.grid.T}]", file=sys.stderr)
        return EXIT_USAGE
    d = args.run_dir / "slices" / args.field
    d.mkdir(parents=True, exist_ok=True)
    print(write_slice(field, args.t, d / slice_name(args.t)))
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "presets": cmd_presets,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "slice": cmd_slice,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ScenarioError as exc:
        print(f"rda-optctl: scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except SolverError as exc:
        print(f"rda-optctl: solver abort: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, ValueError) as exc:
        print(f"rda-optctl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
