"""Scenario documents, validation and the registry of named presets.

A scenario document is YAML (JSON is accepted too).  Keys::

    name: str           mu: float (0.2)         T: float (1)
    boundary: noflux | dirichlet0
    h: expression in x, t
    u0: expression in x, or {piecewise: [{when: cond, value: expr}, ...], default: expr}
    B: float (0.1)      M: float (10)
    grid: {nx: int (101), nt: int | auto}
    sweep: {max_iters: 200, tol: 1e-4, relax: 0.5, init: zero | cap | expression}
    outputs: {fields: true, slices: [times], heatmaps: true}
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field, replace
from typing import Any, Union

import numpy as np
import yaml

from .errors import ScenarioError
from .exprlang import (
    Expr,
    ExprError,
    Piecewise,
    depends_on,
    evaluate,
    parse,
    parse_condition,
    sample_on_grid,
    sample_profile,
    to_source,
)
from .fbsweep import SweepSettings
from .meshgrid import Field, Grid1D, SpaceProfile, stable_dt
from .objective import ObjectiveParams
from .state import BoundaryKind, StateProblem

DEFAULT_MU = 0.2
DEFAULT_T = 1.0
DEFAULT_B = 0.1
DEFAULT_M = 10.0
DEFAULT_NX = 101
AUTO_SAFETY = 0.9
# dt <= REACTION_STEP / max(M, u_cap) keeps the explicit reaction update monotone
REACTION_STEP = 0.1
_H_PROBE_LEVELS = 1025
# one stored field is nt * nx doubles; refuse grids beyond ~400 MB each
MAX_GRID_NODES = 50_000_000


@dataclass(frozen=True)
class OutputSpec:
    fields: bool = True
    slices: tuple = ()
    heatmaps: bool = True


@dataclass(frozen=True)
class Scenario:
    name: str
    h_expr: Expr
    u0_expr: Expr
    mu: float = DEFAULT_MU
    T: float = DEFAULT_T
    boundary: BoundaryKind = BoundaryKind.NO_FLUX
    params: ObjectiveParams = ObjectiveParams(DEFAULT_B, DEFAULT_M)
    nx: int = DEFAULT_NX
    nt: Union[int, str] = "auto"
    sweep: SweepSettings = SweepSettings()
    outputs: OutputSpec = OutputSpec()

    def discretize(self) -> "Discretization":
        return _discretize(self)

    @property
    def grid(self) -> Grid1D:
        return self.discretize().grid

    def state_problem(self, m: Field) -> StateProblem:
        d = self.discretize()
        return StateProblem(self.mu, d.grid, d.h, m, d.u0, self.boundary)

    def with_overrides(self, **overrides) -> "Scenario":
        """Apply ``nx, nt, tol, max_iters, relax, B, M, T, mu, init`` overrides and revalidate."""
        sweep_keys = {"tol", "max_iters", "relax", "init"}
        sw = {("init_control" if k == "init" else k): v for k, v in overrides.items() if k in sweep_keys and v is not None}
        top = {k: v for k, v in overrides.items() if k not in sweep_keys and v is not None}
        params = self.params
        try:
            if "B" in top or "M" in top:
                params = ObjectiveParams(float(top.pop("B", params.B)), float(top.pop("M", params.M)))
            sweep = replace(self.sweep, **sw) if sw else self.sweep
        except ValueError as exc:
            raise ScenarioError(str(exc), "overrides") from None
        unknown = set(top) - {"nx", "nt", "mu", "T", "name"}
        if unknown:
            raise ScenarioError(f"unknown override(s) {sorted(unknown)}", "overrides")
        return validate(replace(self, params=params, sweep=sweep, **top))


@dataclass(frozen=True, eq=False)
class Discretization:
    grid: Grid1D
    h: Field
    u0: SpaceProfile


def _u_cap(scenario: Scenario, u0: SpaceProfile) -> float:
    return max(float(np.max(u0.values)), scenario.params.M)


def _h_max_probe(h_expr: Expr, x: np.ndarray, T: float) -> float:
    if depends_on(h_expr, "t"):
        t = np.linspace(0.0, T, _H_PROBE_LEVELS)
    else:
        t = np.zeros(1)
    return float(np.max(np.abs(evaluate(h_expr, x[None, :], t[:, None]))))


def auto_nt(scenario: Scenario) -> int:
    dx = 1.0 / (scenario.nx - 1)
    x = np.arange(scenario.nx) * dx
    u0_max = float(np.max(evaluate_u0(scenario, x)))
    h_max = _h_max_probe(scenario.h_expr, x, scenario.T)
    if not math.isfinite(h_max):
        raise ScenarioError("advection is not finite on the grid", "h")
    if not math.isfinite(u0_max):
        raise ScenarioError("initial density is not finite on the grid", "u0")
    dt_max = min(
        stable_dt(scenario.mu, dx, h_max, AUTO_SAFETY),
        REACTION_STEP / max(scenario.params.M, u0_max),
    )
    steps = scenario.T / dt_max
    if not steps * scenario.nx <= MAX_GRID_NODES:
        raise ScenarioError(
            f"stable time step {dt_max:.3g} needs about {steps:.3g} levels, over the {MAX_GRID_NODES:g}-node limit",
            "grid.nt",
        )
    return int(math.ceil(steps - 1e-9)) + 1


def evaluate_u0(scenario: Scenario, x):
    return evaluate(scenario.u0_expr, x, 0.0)


@functools.lru_cache(maxsize=64)
def _discretize(scenario: Scenario) -> Discretization:
    nt = auto_nt(scenario) if scenario.nt == "auto" else int(scenario.nt)
    if nt * scenario.nx > MAX_GRID_NODES:
        raise ScenarioError(f"{nt} x {scenario.nx} grid exceeds the {MAX_GRID_NODES:g}-node limit", "grid.nt")
    while True:
        grid = Grid1D(scenario.nx, nt, scenario.T)
        h = sample_on_grid(scenario.h_expr, grid)
        h_max = float(np.max(np.abs(h.values)))
        if not math.isfinite(h_max):
            raise ScenarioError("advection is not finite on the grid", "h")
        # the probe may miss the sampled extremum between probe levels
        if scenario.nt != "auto" or grid.dt <= stable_dt(scenario.mu, grid.dx, h_max, AUTO_SAFETY):
            break
        nt += max(1, nt // 100)
    return Discretization(grid, h, sample_profile(scenario.u0_expr, grid))


def validate(scenario: Scenario) -> Scenario:
    """Check scenario invariants; returns the scenario or raises :class:`ScenarioError`."""
    for key in ("mu", "T"):
        v = getattr(scenario, key)
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
            raise ScenarioError(f"must be a positive number, got {v!r}", key)
    if int(scenario.nx) != scenario.nx or scenario.nx < 3:
        raise ScenarioError(f"must be an integer >= 3, got {scenario.nx!r}", "grid.nx")
    if scenario.nt != "auto" and (not isinstance(scenario.nt, int) or scenario.nt < 2):
        raise ScenarioError(f"must be an integer >= 2 or 'auto', got {scenario.nt!r}", "grid.nt")
    try:
        d = scenario.discretize()
    except ScenarioError:
        raise
    except ValueError as exc:  # expression errors and non-finite samples
        raise ScenarioError(str(exc), "h/u0") from None
    u0 = d.u0.values
    if not np.all(np.isfinite(u0)):
        raise ScenarioError("initial density is not finite on the grid", "u0")
    if np.min(u0) < 0:
        i = int(np.argmin(u0))
        raise ScenarioError(f"initial density is negative ({u0[i]:.6g}) at x={d.grid.x[i]:.6g}", "u0")
    if scenario.nt != "auto":
        g = d.grid
        h_max = float(np.max(np.abs(d.h.values)))
        bound = stable_dt(scenario.mu, g.dx, h_max, 1.0)
        if g.dt > bound:
            raise ScenarioError(f"dt={g.dt:.6g} exceeds the transport bound {bound:.6g}", "grid.nt")
        cap = _u_cap(scenario, d.u0)
        if g.dt * (scenario.params.M + 2.0 * cap) > 0.5:
            raise ScenarioError(f"dt={g.dt:.6g} violates the reaction guard dt*(M+2*u_cap) <= 0.5", "grid.nt")
    return scenario


# -- documents ----------------------------------------------------------------

_TOP_KEYS = {"name", "mu", "T", "boundary", "h", "u0", "B", "M", "grid", "sweep", "outputs"}
_GRID_KEYS = {"nx", "nt"}
_SWEEP_KEYS = {"max_iters", "tol", "relax", "init"}
_OUTPUT_KEYS = {"fields", "slices", "heatmaps"}
_BOUNDARY = {"noflux": BoundaryKind.NO_FLUX, "dirichlet0": BoundaryKind.DIRICHLET_ZERO}


def _mapping(obj, where):
    if not isinstance(obj, dict):
        raise ScenarioError(f"expected a mapping, got {type(obj).__name__}", where)
    return obj


def _check_keys(obj: dict, allowed: set, where: str):
    for key in obj:
        if key not in allowed:
            raise ScenarioError(f"unknown key {key!r}", f"{where}.{key}" if where else str(key))


def _number(obj, key, default, where, integer=False):
    if key not in obj:
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"expected a number, got {v!r}", where)
    if integer:
        if int(v) != v:
            raise ScenarioError(f"expected an integer, got {v!r}", where)
        return int(v)
    return float(v)


def _expr(text, where) -> Expr:
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        text = repr(float(text)) if not float(text).is_integer() else str(int(text))
    if not isinstance(text, str):
        raise ScenarioError(f"expected an expression string, got {text!r}", where)
    try:
        return parse(text)
    except ExprError as exc:
        raise ScenarioError(str(exc), where) from None


def _u0_expr(obj, where="u0") -> Expr:
    if not isinstance(obj, dict):
        return _expr(obj, where)
    _check_keys(obj, {"piecewise", "default"}, where)
    if "piecewise" not in obj or "default" not in obj:
        raise ScenarioError("piecewise form needs 'piecewise' and 'default'", where)
    branches = []
    items = obj["piecewise"]
    if not isinstance(items, list) or not items:
        raise ScenarioError("expected a non-empty list of branches", f"{where}.piecewise")
    for k, item in enumerate(items):
        loc = f"{where}.piecewise[{k}]"
        _mapping(item, loc)
        _check_keys(item, {"when", "value"}, loc)
        if "when" not in item or "value" not in item:
            raise ScenarioError("branch needs 'when' and 'value'", loc)
        try:
            cond = parse_condition(str(item["when"]))
        except ExprError as exc:
            raise ScenarioError(str(exc), f"{loc}.when") from None
        branches.append((cond, _expr(item["value"], f"{loc}.value")))
    return Piecewise(tuple(branches), _expr(obj["default"], f"{where}.default"))


def scenario_from_mapping(doc: dict[str, Any]) -> Scenario:
    _mapping(doc, "")
    _check_keys(doc, _TOP_KEYS, "")
    for key in ("h", "u0"):
        if key not in doc:
            raise ScenarioError("missing required key", key)
    boundary = doc.get("boundary", "noflux")
    if boundary not in _BOUNDARY:
        raise ScenarioError(f"expected 'noflux' or 'dirichlet0', got {boundary!r}", "boundary")

    B = _number(doc, "B", DEFAULT_B, "B")
    M = _number(doc, "M", DEFAULT_M, "M")
    for key, v in (("B", B), ("M", M)):
        if not v > 0:
            raise ScenarioError(f"must be positive, got {v!r}", key)

    grid = _mapping(doc.get("grid", {}) or {}, "grid")
    _check_keys(grid, _GRID_KEYS, "grid")
    nx = _number(grid, "nx", DEFAULT_NX, "grid.nx", integer=True)
    nt = grid.get("nt", "auto")
    if nt != "auto":
        nt = _number(grid, "nt", None, "grid.nt", integer=True)

    sw = _mapping(doc.get("sweep", {}) or {}, "sweep")
    _check_keys(sw, _SWEEP_KEYS, "sweep")
    init = sw.get("init", "zero")
    if init not in ("zero", "cap"):
        init = _expr(init, "sweep.init")
    try:
        sweep = SweepSettings(
            max_iters=_number(sw, "max_iters", 200, "sweep.max_iters", integer=True),
            tol=_number(sw, "tol", 1e-4, "sweep.tol"),
            relax=_number(sw, "relax", 0.5, "sweep.relax"),
            init_control=init,
        )
    except ValueError as exc:
        raise ScenarioError(str(exc), "sweep") from None

    out = _mapping(doc.get("outputs", {}) or {}, "outputs")
    _check_keys(out, _OUTPUT_KEYS, "outputs")
    slices = out.get("slices", [])
    if not isinstance(slices, list):
        raise ScenarioError("expected a list of times", "outputs.slices")
    slice_times = tuple(_number({"t": s}, "t", None, f"outputs.slices[{k}]") for k, s in enumerate(slices))
    T = _number(doc, "T", DEFAULT_T, "T")
    for k, s in enumerate(slice_times):
        if not 0.0 <= s <= T:
            raise ScenarioError(f"slice time {s} outside [0, {T}]", f"outputs.slices[{k}]")
    outputs = OutputSpec(
        fields=bool(out.get("fields", True)),
        slices=slice_times,
        heatmaps=bool(out.get("heatmaps", True)),
    )

    name = doc.get("name", "custom")
    if not isinstance(name, str) or not name:
        raise ScenarioError("expected a non-empty string", "name")

    scenario = Scenario(
        name=name,
        h_expr=_expr(doc["h"], "h"),
        u0_expr=_u0_expr(doc["u0"]),
        mu=_number(doc, "mu", DEFAULT_MU, "mu"),
        T=T,
        boundary=_BOUNDARY[boundary],
        params=ObjectiveParams(B, M),
        nx=nx,
        nt=nt,
        sweep=sweep,
        outputs=outputs,
    )
    return validate(scenario)


def load_scenario(document: str | dict) -> Scenario:
    """Parse a YAML/JSON scenario document (text or already-loaded mapping)."""
    if isinstance(document, str):
        try:
            document = yaml.safe_load(document)
        except yaml.YAMLError as exc:
            raise ScenarioError(f"malformed document: {exc}") from None
    if document is None:
        raise ScenarioError("empty document")
    return scenario_from_mapping(document)


def load_scenario_file(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return load_scenario(fh.read())


def to_mapping(scenario: Scenario) -> dict:
    init = scenario.sweep.init_control
    return {
        "name": scenario.name,
        "mu": scenario.mu,
        "T": scenario.T,
        "boundary": scenario.boundary.value,
        "h": to_source(scenario.h_expr),
        "u0": to_source(scenario.u0_expr),
        "B": scenario.params.B,
        "M": scenario.params.M,
        "grid": {"nx": scenario.nx, "nt": scenario.nt},
        "sweep": {
            "max_iters": scenario.sweep.max_iters,
            "tol": scenario.sweep.tol,
            "relax": scenario.sweep.relax,
            "init": init if isinstance(init, str) else to_source(init),
        },
        "outputs": {
            "fields": scenario.outputs.fields,
            "slices": list(scenario.outputs.slices),
            "heatmaps": scenario.outputs.heatmaps,
        },
    }


def serialize(scenario: Scenario) -> str:
    return yaml.safe_dump(to_mapping(scenario), sort_keys=False)


# -- presets ------------------------------------------------------------------


class PresetId(enum.Enum):
    NEU_H1 = "NEU_H1"
    NEU_H2 = "NEU_H2"
    NEU_H3 = "NEU_H3"
    NEU_H4 = "NEU_H4"
    NEU_HCONST = "NEU_HCONST"
    NEU_U0_SINE = "NEU_U0_SINE"
    NEU_U0_PARAB = "NEU_U0_PARAB"
    NEU_U0_QUAD = "NEU_U0_QUAD"
    M_1 = "M_1"
    M_20 = "M_20"
    B_005 = "B_005"
    B_05 = "B_05"
    B_1 = "B_1"
    DIR_H0 = "DIR_H0"
    DIR_H3X = "DIR_H3X"
    DIR_HNEG10X = "DIR_HNEG10X"


@dataclass(frozen=True)
class PresetInfo:
    description: str
    h: str
    u0: str
    B: float = 0.1
    M: float = 10.0
    boundary: BoundaryKind = BoundaryKind.NO_FLUX
    slices: tuple = field(default=(1.0,))


_U0_SINE = "sin(2*pi*x)+1"
_U0_DIR = "piecewise(0.25 <= x <= 0.75: sin(2*pi*x-pi/2), 0)"
_H1 = "sin(6*pi*x)+1.1"
_H_SINE = "-sin(2*pi*x)"
# initial-value presets use a cap that stays inactive at B = 0.1
_M_BIG = 50.0

PRESETS: dict[PresetId, PresetInfo] = {
    PresetId.NEU_H1: PresetInfo("positive oscillating advection h1", _H1, _U0_SINE, slices=(0.2, 1.0)),
    PresetId.NEU_H2: PresetInfo("negative quadratic advection h2", "-(2-2*x)*x-0.1", _U0_SINE),
    PresetId.NEU_H3: PresetInfo("time-dependent advection h3", "x^2*t+x*(1-t)", _U0_SINE),
    PresetId.NEU_H4: PresetInfo("time-dependent advection h4", "(x-0.5)*(-sin(2*pi*t))", _U0_SINE),
    PresetId.NEU_HCONST: PresetInfo(
        "constant advection, early/middle/final slices", "0.1", _U0_SINE, slices=(0.1, 0.5, 1.0)
    ),
    PresetId.NEU_U0_SINE: PresetInfo(
        "initial value sin(2 pi x)+1 under h=-sin(2 pi x)", _H_SINE, _U0_SINE, M=_M_BIG, slices=(0.1, 1.0)
    ),
    PresetId.NEU_U0_PARAB: PresetInfo(
        "initial value -(x-1/2)^2+1/4 under h=-sin(2 pi x)", _H_SINE, "-(x-0.5)^2+0.25", M=_M_BIG
    ),
    PresetId.NEU_U0_QUAD: PresetInfo(
        "initial value 2x^2-x/2+1 under h=-sin(2 pi x)", _H_SINE, "2*x^2-0.5*x+1", M=_M_BIG, slices=(0.1, 1.0)
    ),
    PresetId.M_1: PresetInfo("resource cap M=1", _H1, _U0_SINE, M=1.0),
    PresetId.M_20: PresetInfo("resource cap M=20", _H1, _U0_SINE, M=20.0),
    PresetId.B_005: PresetInfo("cost weight B=0.05", _H1, _U0_SINE, B=0.05, slices=(0.2, 1.0)),
    PresetId.B_05: PresetInfo("cost weight B=0.5", _H1, _U0_SINE, B=0.5, slices=(0.2, 1.0)),
    PresetId.B_1: PresetInfo("cost weight B=1", _H1, _U0_SINE, B=1.0, slices=(0.2, 1.0)),
    PresetId.DIR_H0: PresetInfo("hostile boundary, no advection", "0", _U0_DIR, boundary=BoundaryKind.DIRICHLET_ZERO),
    PresetId.DIR_H3X: PresetInfo("hostile boundary, h=3x", "3*x", _U0_DIR, boundary=BoundaryKind.DIRICHLET_ZERO),
    PresetId.DIR_HNEG10X: PresetInfo(
        "hostile boundary, h=-10x", "-10*x", _U0_DIR, boundary=BoundaryKind.DIRICHLET_ZERO
    ),
}


def preset(preset_id: PresetId | str) -> Scenario:
    pid = PresetId(preset_id) if isinstance(preset_id, str) else preset_id
    info = PRESETS[pid]
    return validate(
        Scenario(
            name=pid.value,
            h_expr=parse(info.h),
            u0_expr=parse(info.u0),
            boundary=info.boundary,
            params=ObjectiveParams(info.B, info.M),
            outputs=OutputSpec(slices=info.slices),
        )
    )


def resolve(source: str) -> Scenario:
    """``preset:<ID>`` or a path to a scenario file."""
    if source.startswith("preset:"):
        name = source.split(":", 1)[1]
        try:
            return preset(PresetId(name))
        except ValueError:
            raise ScenarioError(f"unknown preset {name!r}", "scenario") from None
    try:
        return load_scenario_file(source)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}", source) from None
