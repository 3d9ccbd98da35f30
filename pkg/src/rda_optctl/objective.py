from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .meshgrid import Field, SpaceProfile, integrate_spacetime


@dataclass(frozen=True)
class ObjectiveParams:
    """Cost weight ``B`` and resource cap ``M``."""

    B: float
    M: float

    def __post_init__(self):
        if not (math.isfinite(self.B) and self.B > 0):
            raise ValueError(f"B must be positive, got {self.B}")
        if not (math.isfinite(self.M) and self.M > 0):
            raise ValueError(f"M must be positive, got {self.M}")


def evaluate_J(u: Field, m: Field, params: ObjectiveParams) -> float:
    """Net benefit: space-time integral of ``u - B m^2``."""
    if u.grid != m.grid:
        raise ValueError("u and m live on different grids")
    return integrate_spacetime(u - params.B * (m * m))


def J_upper_bound(u0: SpaceProfile, params: ObjectiveParams, T: float) -> float:
    """``(e^{T M} - 1) max(u0) / M``, the growth-based ceiling on ``J``."""
    return math.expm1(T * params.M) * float(np.max(u0.values)) / params.M
