"""Explicit finite-volume solver for the logistic reaction-diffusion-advection state.

    u_t - (mu u_x - h u)_x = u (m - u) + g

Conservative flux form, first-order upwind advection, explicit Euler in
time.  Boundary nodes own half cells, so the no-flux scheme conserves the
trapezoid mass up to the reaction and source terms.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import NegativeDensityError, NonFiniteError, StabilityError
from .meshgrid import Field, Grid1D, SpaceProfile, stable_dt


class BoundaryKind(enum.Enum):
    NO_FLUX = "noflux"
    DIRICHLET_ZERO = "dirichlet0"


@dataclass(frozen=True, eq=False)
class StateProblem:
    mu: float
    grid: Grid1D
    h: Field
    m: Field
    u0: SpaceProfile
    boundary: BoundaryKind = BoundaryKind.NO_FLUX
    source: Optional[Field] = None

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        for name in ("h", "m", "source"):
            f = getattr(self, name)
            if f is not None and f.grid != self.grid:
                raise ValueError(f"{name} is sampled on a different grid")
        if self.u0.grid != self.grid:
            raise ValueError("u0 is sampled on a different grid")
        if np.min(self.u0.values) < 0:
            raise ValueError("initial density must be non-negative")


def check_transport_step(mu: float, grid: Grid1D, h: Field):
    h_max = float(np.max(np.abs(h.values)))
    bound = stable_dt(mu, grid.dx, h_max, 1.0)
    if grid.dt > bound:
        raise StabilityError(
            f"dt={grid.dt:.6g} exceeds the explicit transport bound {bound:.6g} "
            f"(mu={mu}, dx={grid.dx:.6g}, max|h|={h_max:.6g})",
            level=0,
        )


def _contig(f: Optional[Field]):
    return None if f is None else np.ascontiguousarray(f.values)


def _raise_for(status, level, value, what):
    if status == 1:
        raise NonFiniteError(f"{what}: non-finite value at time level {level}", level=level)
    if status == 2:
        raise NegativeDensityError(f"{what}: value {value:.3e} below -1e-10 at time level {level}", level=level)
    if status == 3:
        raise StabilityError(
            f"{what}: reaction step guard violated at time level {level} (running max {value:.6g})",
            level=level,
        )


def solve_state(problem: StateProblem, backend: str | None = None) -> Field:
    """Return the density ``u`` with ``u[0] = u0``."""
    g = problem.grid
    check_transport_step(problem.mu, g, problem.h)
    out = np.empty((g.nt, g.nx))
    status, level, value = kernels.get(backend).flux_march(
        np.ascontiguousarray(problem.u0.values),
        _contig(problem.h),
        _contig(problem.m),
        _contig(problem.source),
        float(problem.mu),
        g.dx,
        g.dt,
        1.0,
        float(np.max(np.abs(problem.m.values))),
        problem.boundary is BoundaryKind.DIRICHLET_ZERO,
        True,
        out,
    )
    _raise_for(status, level, value, "state solve")
    return Field(g, out)


def mass_history(u: Field) -> list[tuple[float, float]]:
    """``(t_n, integral of u(., t_n) dx)`` for every time level."""
    masses = u.values @ u.grid.x_weights
    return [(float(t), float(mass)) for t, mass in zip(u.grid.t, masses)]


def masses(u: Field) -> np.ndarray:
    return u.values @ u.grid.x_weights


def mass_bound_margin(u: Field, c_m: float) -> float:
    """Smallest ``e^{C_m t} mass(0) (1 + 1e-6) - mass(t)``; non-negative when the growth bound holds."""
    mass = masses(u)
    bound = np.exp(c_m * u.grid.t) * mass[0] * (1.0 + 1e-6)
    return float(np.min(bound - mass))


__all__ = [
    "BoundaryKind",
    "StateProblem",
    "solve_state",
    "mass_history",
    "masses",
    "mass_bound_margin",
]
