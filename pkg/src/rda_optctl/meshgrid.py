"""Uniform space-time grid on [0, 1] x [0, T], sampled fields and quadrature.

Fields are stored time-major: ``values[n, i]`` is the sample at time level
``n`` and space node ``i``.  All quadrature uses the trapezoid rule, whose
weights coincide with the control-volume widths of the state stencil.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Grid1D:
    """Node-centred uniform grid, boundary nodes included."""

    nx: int
    nt: int
    T: float

    def __post_init__(self):
        if int(self.nx) != self.nx or self.nx < 3:
            raise ValueError(f"nx must be an integer >= 3, got {self.nx}")
        if int(self.nt) != self.nt or self.nt < 2:
            raise ValueError(f"nt must be an integer >= 2, got {self.nt}")
        if not np.isfinite(self.T) or self.T <= 0.0:
            raise ValueError(f"T must be positive and finite, got {self.T}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "nt", int(self.nt))
        object.__setattr__(self, "T", float(self.T))

    @property
    def dx(self) -> float:
        return 1.0 / (self.nx - 1)

    @property
    def dt(self) -> float:
        return self.T / (self.nt - 1)

    @cached_property
    def x(self) -> np.ndarray:
        x = np.arange(self.nx, dtype=np.float64) * self.dx
        x.flags.writeable = False
        return x

    @cached_property
    def t(self) -> np.ndarray:
        t = np.arange(self.nt, dtype=np.float64) * self.dt
        t.flags.writeable = False
        return t

    @cached_property
    def x_weights(self) -> np.ndarray:
        return _trapezoid_weights(self.nx, self.dx)

    @cached_property
    def t_weights(self) -> np.ndarray:
        return _trapezoid_weights(self.nt, self.dt)

    def nearest_level(self, t: float) -> int:
        """Index of the time level closest to ``t`` (ties go to the earlier level)."""
        if not (0.0 <= t <= self.T * (1.0 + 1e-12)):
            raise ValueError(f"time {t} outside [0, {self.T}]")
        return int(min(self.nt - 1, max(0, round(t / self.dt))))


def _trapezoid_weights(n: int, step: float) -> np.ndarray:
    w = np.full(n, step, dtype=np.float64)
    w[0] = w[-1] = 0.5 * step
    w.flags.writeable = False
    return w


def _frozen(values, shape) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.shape != shape:
        raise ValueError(f"expected shape {shape}, got {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Field:
    """A real function sampled on every node of a :class:`Grid1D`."""

    grid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        shape = (self.grid.nt, self.grid.nx)
        object.__setattr__(self, "values", _frozen(self.values, shape))

    @classmethod
    def constant(cls, grid: Grid1D, c: float) -> "Field":
        return cls(grid, np.full((grid.nt, grid.nx), float(c)))

    @classmethod
    def zeros(cls, grid: Grid1D) -> "Field":
        return cls.constant(grid, 0.0)

    def at(self, i: int, n: int) -> float:
        """Value at space node ``i`` and time level ``n``."""
        return float(self.values[n, i])

    def level(self, n: int) -> "SpaceProfile":
        return SpaceProfile(self.grid, self.values[n])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def __add__(self, other):
        return Field(self.grid, self.values + _operand(self, other))

    def __sub__(self, other):
        return Field(self.grid, self.values - _operand(self, other))

    def __mul__(self, other):
        return Field(self.grid, self.values * _operand(self, other))

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)


def _operand(f: Field, other):
    if isinstance(other, Field):
        if other.grid != f.grid:
            raise ValueError("fields live on different grids")
        return other.values
    return float(other)


@dataclass(frozen=True, eq=False)
class SpaceProfile:
    """One time slice: ``nx`` samples over [0, 1]."""

    grid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = _frozen(self.values, (self.grid.nx,))
        if not np.all(np.isfinite(arr)):
            raise ValueError("profile contains non-finite values")
        object.__setattr__(self, "values", arr)


def integrate_space(profile: SpaceProfile) -> float:
    """Trapezoid approximation of the integral of ``profile`` over [0, 1]."""
    return float(np.dot(profile.grid.x_weights, profile.values))


def integrate_spacetime(f: Field) -> float:
    """Trapezoid rule in both x and t."""
    g = f.grid
    return float(g.t_weights @ f.values @ g.x_weights)


def linf_norm(f: Field) -> float:
    return float(np.max(np.abs(f.values)))


def l2_norm(f: Field) -> float:
    """Quadrature-weighted L2 norm over the space-time cylinder."""
    g = f.grid
    return float(np.sqrt(g.t_weights @ (f.values * f.values) @ g.x_weights))


def stable_dt(mu: float, dx: float, h_max: float, safety: float = 0.9) -> float:
    """Explicit advection-diffusion step bound ``safety * dx^2 / (2 mu + h_max dx)``."""
    if mu <= 0 or dx <= 0:
        raise ValueError("mu and dx must be positive")
    if h_max < 0:
        raise ValueError("h_max must be non-negative")
    if not 0.0 < safety <= 1.0:
        raise ValueError("safety must lie in (0, 1]")
    return safety * dx * dx / (2.0 * mu + h_max * dx)
