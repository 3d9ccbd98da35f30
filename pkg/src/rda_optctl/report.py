"""Run artifacts: long-format field CSVs, time slices, SVG heatmaps, JSON summary."""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .meshgrid import Field, Grid1D, integrate_spacetime

VALUE_FMT = "%.9f"
HEATMAP_MAX_ROWS = 200
HEATMAP_MAX_COLS = 200


def write_field_csv(field: Field, path) -> Path:
    """Header ``x,t,value``; rows t-major, then x."""
    g = field.grid
    x = np.tile(g.x, g.nt)
    t = np.repeat(g.t, g.nx)
    table = np.column_stack([x, t, field.values.reshape(-1)])
    path = Path(path)
    try:
        with open(path, "w", newline="\n", encoding="ascii") as fh:
            fh.write("x,t,value\n")
            np.savetxt(fh, table, fmt=VALUE_FMT, delimiter=",", newline="\n")
    except OSError as exc:
        raise OSError(f"cannot write field CSV {path}: {exc.strerror or exc}") from exc
    return path


def read_field_csv(path) -> Field:
    """Inverse of :func:`write_field_csv`; the grid is rebuilt from the columns."""
    with open(path, encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != "x,t,value":
            raise ValueError(f"{path}: unexpected header {header!r}")
        table = np.loadtxt(fh, delimiter=",", ndmin=2)
    x = table[:, 0]
    nx = int(np.argmax(x[1:] <= x[:-1])) + 1 if np.any(x[1:] <= x[:-1]) else len(x)
    nt = len(x) // nx
    if nt * nx != len(x):
        raise ValueError(f"{path}: row count {len(x)} is not a multiple of nx={nx}")
    grid = Grid1D(nx, nt, float(table[-1, 1]))
    return Field(grid, table[:, 2].reshape(nt, nx))


def slice_name(t: float) -> str:
    return f"slice_t{t:g}.csv"


def write_slice(field: Field, t: float, path) -> Path:
    """Nearest time level to ``t``; header ``x,value``."""
    g = field.grid
    if not 0.0 <= t <= g.T * (1 + 1e-12):
        raise ValueError(f"slice time {t} outside [0, {g.T}]")
    n = g.nearest_level(t)
    path = Path(path)
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write("x,value\n")
        np.savetxt(fh, np.column_stack([g.x, field.values[n]]), fmt=VALUE_FMT, delimiter=",", newline="\n")
    return path


def read_slice(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, encoding="ascii") as fh:
        if fh.readline().strip() != "x,value":
            raise ValueError(f"{path}: unexpected header")
        table = np.loadtxt(fh, delimiter=",", ndmin=2)
    return table[:, 0], table[:, 1]


def _color(s: float) -> str:
    r = int(round(255 * s))
    return f"#{r:02x}00{255 - r:02x}"


def render_heatmap(field: Field, path, title: str = "") -> Path:
    """Standalone SVG: x to the right, t upward, blue (min) to red (max)."""
    g = field.grid
    rows = np.unique(np.round(np.linspace(0, g.nt - 1, min(g.nt, HEATMAP_MAX_ROWS))).astype(int))
    cols = np.unique(np.round(np.linspace(0, g.nx - 1, min(g.nx, HEATMAP_MAX_COLS))).astype(int))
    data = field.values[np.ix_(rows, cols)]
    lo = float(np.min(field.values))
    hi = float(np.max(field.values))
    span = hi - lo

    left, top, width, height = 60.0, 30.0, 480.0, 320.0
    total_w, total_h = 640, 420
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{total_h}" '
        f'viewBox="0 0 {total_w} {total_h}">',
        f'<rect x="0" y="0" width="{total_w}" height="{total_h}" fill="#ffffff"/>',
    ]
    if title:
        out.append(f'<text x="{left:.1f}" y="20" font-family="sans-serif" font-size="14">{_escape(title)}</text>')
    if span == 0.0:
        out.append(f'<rect x="{left:.1f}" y="{top:.1f}" width="{width:.1f}" height="{height:.1f}" fill="{_color(0.0)}"/>')
    else:
        cw = width / len(cols)
        ch = height / len(rows)
        out.append('<g shape-rendering="crispEdges">')
        for r in range(len(rows)):
            # t = 0 at the bottom
            y = top + height - (r + 1) * ch
            for c in range(len(cols)):
                s = (data[r, c] - lo) / span
                out.append(
                    f'<rect x="{left + c * cw:.3f}" y="{y:.3f}" width="{cw:.3f}" height="{ch:.3f}" '
                    f'fill="{_color(s)}"/>'
                )
        out.append("</g>")
    out += [
        f'<text x="{left + width / 2:.1f}" y="{top + height + 22:.1f}" font-family="sans-serif" '
        f'font-size="12" text-anchor="middle">x</text>',
        f'<text x="{left - 30:.1f}" y="{top + height / 2:.1f}" font-family="sans-serif" font-size="12">t</text>',
        f'<text x="{left + width + 10:.1f}" y="{top + 12:.1f}" font-family="sans-serif" font-size="11">'
        f"max={hi:.6g}</text>",
        f'<text x="{left + width + 10:.1f}" y="{top + height:.1f}" font-family="sans-serif" font-size="11">'
        f"min={lo:.6g}</text>",
        "</svg>",
    ]
    path = Path(path)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")
    return path


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def summary_document(result, scenario, invariants: dict, backend: str = "") -> dict:
    from .scenario import to_mapping

    rep = result.report
    g = result.m.grid
    return {
        "scenario": scenario.name,
        "parameters": to_mapping(scenario),
        "grid": {"nx": g.nx, "nt": g.nt, "dt": g.dt, "dx": g.dx},
        "iterations": rep.iterations,
        "converged": rep.converged,
        "final_J": rep.final_J,
        "mean_m": integrate_spacetime(result.m) / g.T,
        "J_history": list(rep.J_history),
        "change_history": list(rep.change_history),
        "invariants": invariants,
        "notes": rep.wall_notes,
        "backend": backend,
    }


def write_summary(result, scenario, path, invariants: dict | None = None, backend: str = "") -> Path:
    """JSON summary of a sweep run with the invariant-check block."""
    from .verify import invariant_checks

    if invariants is None:
        invariants = invariant_checks(scenario, result)
    doc = summary_document(result, scenario, invariants, backend)
    path = Path(path)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return path


def write_run(scenario, result, out_dir, backend: str = "") -> list[Path]:
    """Write every artifact requested by ``scenario.outputs``; returns the paths."""
    out_dir = Path(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    fields = {"u": result.u, "m": result.m, "p": result.p}
    written = []
    if scenario.outputs.fields:
        for name, f in fields.items():
            written.append(write_field_csv(f, out_dir / f"{name}.csv"))
    for t in scenario.outputs.slices:
        for name, f in fields.items():
            d = out_dir / "slices" / name
            d.mkdir(parents=True, exist_ok=True)
            written.append(write_slice(f, t, d / slice_name(t)))
    if scenario.outputs.heatmaps:
        for name in ("u", "m"):
            written.append(render_heatmap(fields[name], out_dir / f"heatmap_{name}.svg", f"{scenario.name}: {name}(x, t)"))
    written.append(write_summary(result, scenario, out_dir / "summary.json", backend=backend))
    return written
