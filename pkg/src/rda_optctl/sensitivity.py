"""Linearised state and the directional-derivative checks built on it.

The sensitivity ``phi = du/dm [l]`` solves

    phi_t - (mu phi_x - h phi)_x - phi (m - 2u) = u l,   phi(., 0) = 0,

discretised with the state stencil, so it is the exact linearisation of the
discrete state map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .adjoint import AdjointProblem, solve_adjoint
from .errors import ClampingError, StabilityError
from .meshgrid import Field, Grid1D, integrate_spacetime
from .objective import ObjectiveParams, evaluate_J
from .state import BoundaryKind, StateProblem, _raise_for, check_transport_step, solve_state


@dataclass(frozen=True, eq=False)
class SensitivityProblem:
    mu: float
    grid: Grid1D
    h: Field
    m: Field
    u: Field
    l: Field
    boundary: BoundaryKind = BoundaryKind.NO_FLUX


def solve_sensitivity(problem: SensitivityProblem, backend: str | None = None) -> Field:
    g = problem.grid
    check_transport_step(problem.mu, g, problem.h)
    rate = np.ascontiguousarray(problem.m.values - 2.0 * problem.u.values)
    rate_max = float(np.max(np.abs(rate)))
    if g.dt * rate_max > 0.5:
        raise StabilityError(f"sensitivity reaction guard: dt*max|m-2u| = {g.dt * rate_max:.4g} > 0.5")
    out = np.empty((g.nt, g.nx))
    status, level, value = kernels.get(backend).flux_march(
        np.zeros(g.nx),
        np.ascontiguousarray(problem.h.values),
        rate,
        np.ascontiguousarray(problem.u.values * problem.l.values),
        float(problem.mu),
        g.dx,
        g.dt,
        0.0,
        rate_max,
        problem.boundary is BoundaryKind.DIRICHLET_ZERO,
        False,
        out,
    )
    _raise_for(status, level, value, "sensitivity solve")
    return Field(g, out)


def adjoint_pairing(u: Field, p: Field, m: Field, l: Field, B: float) -> float:
    """Space-time integral of ``l (u p - 2 B m)``: the adjoint directional derivative of J."""
    return integrate_spacetime(l * (u * p - (2.0 * B) * m))


def _objective(base: StateProblem, m: Field, params: ObjectiveParams) -> float:
    u = solve_state(
        StateProblem(base.mu, base.grid, base.h, m, base.u0, base.boundary, base.source)
    )
    return evaluate_J(u, m, params)


def directional_derivative_fd(
    base: StateProblem,
    params: ObjectiveParams,
    m: Field,
    l: Field,
    eps: float = 1e-3,
    central: bool = False,
) -> float:
    """Finite-difference slope of ``J`` at ``m`` along ``l``.

    ``base`` supplies everything but the control.  Forward differences by
    default; ``central=True`` also needs ``m - eps l`` feasible.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    _check_feasible(m + eps * l, params.M, "m + eps*l")
    _check_feasible(m, params.M, "m")
    j_plus = _objective(base, m + eps * l, params)
    if central:
        _check_feasible(m - eps * l, params.M, "m - eps*l")
        return (j_plus - _objective(base, m - eps * l, params)) / (2.0 * eps)
    return (j_plus - _objective(base, m, params)) / eps


def _check_feasible(m: Field, M: float, what: str):
    lo = float(np.min(m.values))
    hi = float(np.max(m.values))
    if lo < 0.0 or hi > M:
        raise ClampingError(f"{what} leaves [0, {M}] (range [{lo:.6g}, {hi:.6g}])")


@dataclass
class GradientCheck:
    label: str
    fd: float
    pairing: float

    @property
    def rel_error(self) -> float:
        return abs(self.fd - self.pairing) / max(abs(self.pairing), 1e-8)

    def passed(self, tol: float = 0.02) -> bool:
        return self.rel_error <= tol


def gradient_check(
    base: StateProblem,
    params: ObjectiveParams,
    m: Field,
    directions: dict[str, Field],
    eps: float = 1e-3,
) -> list[GradientCheck]:
    """Compare finite-difference and adjoint directional derivatives of ``J`` at ``m``."""
    state = StateProblem(base.mu, base.grid, base.h, m, base.u0, base.boundary, base.source)
    u = solve_state(state)
    p = solve_adjoint(AdjointProblem(base.mu, base.grid, base.h, m, u, base.boundary))
    out = []
    for label, l in directions.items():
        fd = directional_derivative_fd(state, params, m, l, eps)
        out.append(GradientCheck(label, fd, adjoint_pairing(u, p, m, l, params.B)))
    return out
