"""Forward-backward sweep for the optimal resource allocation.

Each iteration solves the state forward, the adjoint backward, and moves the
control toward the projected characterisation ``clamp(u p / 2B, 0, M)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .adjoint import AdjointProblem, solve_adjoint
from .errors import SolverError
from .exprlang import Expr, sample_on_grid
from .meshgrid import Field, Grid1D, SpaceProfile, l2_norm
from .objective import ObjectiveParams, evaluate_J
from .state import BoundaryKind, StateProblem, solve_state

logger = logging.getLogger(__name__)

InitControl = Union[str, Expr]  # "zero", "cap" or an expression in x, t


@dataclass(frozen=True)
class SweepSettings:
    max_iters: int = 200
    tol: float = 1e-4
    relax: float = 0.5
    init_control: InitControl = "zero"

    def __post_init__(self):
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError("max_iters must be a positive integer")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0.0 < self.relax <= 1.0:
            raise ValueError("relax must lie in (0, 1]")
        if isinstance(self.init_control, str) and self.init_control not in ("zero", "cap"):
            raise ValueError("init_control must be 'zero', 'cap' or an expression")


@dataclass
class SweepReport:
    iterations: int = 0
    converged: bool = False
    J_history: list = field(default_factory=list)
    change_history: list = field(default_factory=list)
    final_J: float = float("nan")
    wall_notes: str = ""


@dataclass(frozen=True, eq=False)
class SweepResult:
    m: Field
    u: Field
    p: Field
    report: SweepReport


def projected_target(u: Field, p: Field, params: ObjectiveParams) -> Field:
    return Field(u.grid, np.clip(u.values * p.values / (2.0 * params.B), 0.0, params.M))


def control_update(u: Field, p: Field, params: ObjectiveParams, relax: float, m_old: Field) -> Field:
    """Relaxed projected update ``(1 - relax) m_old + relax clamp(u p / 2B, 0, M)``."""
    target = projected_target(u, p, params).values
    new = (1.0 - relax) * m_old.values + relax * target
    return Field(u.grid, np.clip(new, 0.0, params.M))


def initial_control(grid: Grid1D, params: ObjectiveParams, init: InitControl) -> Field:
    if isinstance(init, str):
        if init == "zero":
            return Field.zeros(grid)
        if init == "cap":
            return Field.constant(grid, params.M)
        raise ValueError(f"unknown initial control {init!r}")
    return Field(grid, np.clip(sample_on_grid(init, grid).values, 0.0, params.M))


def forward_backward_sweep(
    mu: float,
    grid: Grid1D,
    h: Field,
    u0: SpaceProfile,
    boundary: BoundaryKind,
    params: ObjectiveParams,
    settings: SweepSettings = SweepSettings(),
    m0: Field | None = None,
) -> SweepResult:
    m = initial_control(grid, params, settings.init_control) if m0 is None else m0
    report = SweepReport()

    def solve_pair(control, k):
        try:
            u = solve_state(StateProblem(mu, grid, h, control, u0, boundary))
            p = solve_adjoint(AdjointProblem(mu, grid, h, control, u, boundary))
        except SolverError as exc:
            exc.iteration = k
            exc.args = (f"{exc.args[0]} (sweep iteration {k})",)
            raise
        return u, p

    for k in range(settings.max_iters):
        u, p = solve_pair(m, k)
        report.J_history.append(evaluate_J(u, m, params))
        m_new = control_update(u, p, params, settings.relax, m)
        change = l2_norm(m_new - m) / max(l2_norm(m_new), 1e-12)
        report.change_history.append(change)
        report.iterations = k + 1
        m = m_new
        if change <= settings.tol:
            report.converged = True
            break

    u, p = solve_pair(m, report.iterations)
    report.final_J = evaluate_J(u, m, params)
    if not report.converged:
        report.wall_notes = (
            f"not converged after {report.iterations} iterations "
            f"(last relative change {report.change_history[-1]:.3e} > tol {settings.tol:g})"
        )
        logger.info(report.wall_notes)
    else:
        report.wall_notes = f"converged after {report.iterations} iterations"
    return SweepResult(m, u, p, report)


def run_fbs(scenario, settings: SweepSettings | None = None) -> SweepResult:
    """Run the sweep for a :class:`~rda_optctl.scenario.Scenario`."""
    disc = scenario.discretize()
    return forward_backward_sweep(
        scenario.mu,
        disc.grid,
        disc.h,
        disc.u0,
        scenario.boundary,
        scenario.params,
        settings or scenario.sweep,
    )
