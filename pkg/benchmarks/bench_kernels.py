"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--preset NEU_H1] [--nx 101] [--repeats 5] [--json out.json]

Each kernel runs on identical inputs under both backends; the table shows
the median wall time, the speed-up and the largest relative difference.
The full sweep is timed once per backend (it dominates a ``run``).
"""

from __future__ import annotations

import argparse
import json
import platform
import statistics
import sys
import time

import numpy as np

from rda_optctl import kernels
from rda_optctl.adjoint import AdjointProblem, solve_adjoint
from rda_optctl.fbsweep import forward_backward_sweep
from rda_optctl.meshgrid import Field
from rda_optctl.scenario import preset
from rda_optctl.sensitivity import SensitivityProblem, solve_sensitivity
from rda_optctl.state import solve_state


def _time(fn, repeats):
    samples = []
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples), result


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def run(preset_id, nx, repeats, sweep_iters):
    s = preset(preset_id).with_overrides(nx=nx)
    g = s.grid
    X, Tt = np.meshgrid(g.x, g.t)
    m = Field(g, 2.0 + np.cos(np.pi * X) * np.sin(np.pi * Tt))
    prob = s.state_problem(m)
    u_ref = solve_state(prob, backend="python")
    l = Field(g, np.cos(np.pi * X))
    d = s.discretize()

    cases = {
        "state": lambda b: solve_state(prob, backend=b).values,
        "adjoint": lambda b: solve_adjoint(AdjointProblem(s.mu, g, prob.h, m, u_ref, s.boundary), backend=b).values,
        "sensitivity": lambda b: solve_sensitivity(
            SensitivityProblem(s.mu, g, prob.h, m, u_ref, l, s.boundary), backend=b
        ).values,
    }
    backends = kernels.available()
    rows = []
    for name, fn in cases.items():
        times, outs = {}, {}
        for b in backends:
            fn(b)  # warm-up
            times[b], outs[b] = _time(lambda: fn(b), repeats)
        rows.append({"kernel": name, "times": times,
                     "max_rel_diff": _rel(outs["cython"], outs["python"]) if "cython" in outs else 0.0})

    # the sweep calls the active backend; swap it for the timing
    times, outs = {}, {}
    saved = kernels._active
    settings = type(s.sweep)(max_iters=sweep_iters, tol=s.sweep.tol, relax=s.sweep.relax)
    try:
        for b in backends:
            kernels._active = kernels.get(b)
            times[b], res = _time(
                lambda: forward_backward_sweep(s.mu, d.grid, d.h, d.u0, s.boundary, s.params, settings), 1
            )
            outs[b] = res.m.values
    finally:
        kernels._active = saved
    rows.append({"kernel": f"sweep ({sweep_iters} its max)", "times": times,
                 "max_rel_diff": _rel(outs["cython"], outs["python"]) if "cython" in outs else 0.0})
    return s, g, rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="NEU_H1")
    ap.add_argument("--nx", type=int, default=101)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--sweep-iters", type=int, default=200)
    ap.add_argument("--json", help="also write the results here")
    args = ap.parse_args(argv)

    s, g, rows = run(args.preset, args.nx, args.repeats, args.sweep_iters)
    print(f"preset {s.name}: nx={g.nx}, nt={g.nt} ({g.nx * g.nt:,} nodes), backends {', '.join(kernels.available())}")
    print(f"python {platform.python_version()}, numpy {np.__version__}, {platform.machine()}")
    print()
    print(f"{'kernel':<22}{'python [s]':>12}{'cython [s]':>12}{'speed-up':>10}{'max rel diff':>15}")
    for r in rows:
        t = r["times"]
        cy = t.get("cython")
        speed = f"{t['python'] / cy:9.1f}x" if cy else "      n/a"
        cy_s = f"{cy:12.4f}" if cy else f"{'n/a':>12}"
        print(f"{r['kernel']:<22}{t['python']:12.4f}{cy_s}{speed:>10}{r['max_rel_diff']:15.2e}")
    if "cython" not in kernels.available():
        print("\ncompiled extension not built; only the numpy fallback was timed", file=sys.stderr)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"preset": s.name, "nx": g.nx, "nt": g.nt, "rows": rows}, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
