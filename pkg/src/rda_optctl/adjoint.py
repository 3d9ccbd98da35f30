"""Backward adjoint solve.

Solves ``-p_t - mu p_xx - h p_x - (m - 2u) p = 1`` with ``p(., T) = 0``
by marching ``q(x, s) = p(x, T - s)`` forward in ``s``.  No-flux states pair
with ``p_x = 0`` at the walls, Dirichlet states with ``p = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NonFiniteError, StabilityError
from .meshgrid import Field, Grid1D
from .state import BoundaryKind, check_transport_step


@dataclass(frozen=True, eq=False)
class AdjointProblem:
    mu: float
    grid: Grid1D
    h: Field
    m: Field
    u: Field
    boundary: BoundaryKind = BoundaryKind.NO_FLUX

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        for name in ("h", "m", "u"):
            if getattr(self, name).grid != self.grid:
                raise ValueError(f"{name} is sampled on a different grid")


def solve_adjoint(problem: AdjointProblem, backend: str | None = None) -> Field:
    g = problem.grid
    check_transport_step(problem.mu, g, problem.h)
    c = 2.0 * problem.u.values - problem.m.values
    c_max = float(np.max(np.abs(c)))
    if g.dt * c_max > 0.5:
        raise StabilityError(f"adjoint reaction guard: dt*max|2u-m| = {g.dt * c_max:.4g} > 0.5", level=None)
    out = np.empty((g.nt, g.nx))
    status, level, _ = kernels.get(backend).adjoint_march(
        np.ascontiguousarray(problem.h.values),
        np.ascontiguousarray(c),
        float(problem.mu),
        g.dx,
        g.dt,
        problem.boundary is BoundaryKind.DIRICHLET_ZERO,
        out,
    )
    if status:
        raise NonFiniteError(f"adjoint solve: non-finite value at time level {level}", level=level)
    return Field(g, out)


def gradient_bound(p: Field) -> float:
    """Max of the one-sided finite-difference slope ``|p_x|`` over the grid."""
    return float(np.max(np.abs(np.diff(p.values, axis=1)))) / p.grid.dx
