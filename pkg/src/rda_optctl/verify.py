"""Self-contained verification suites driven by ``rda-optctl verify``.

Each check returns a :class:`Check`; nothing here reads external data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .adjoint import AdjointProblem, gradient_bound, solve_adjoint
from .meshgrid import Field, Grid1D, SpaceProfile, l2_norm, stable_dt
from .objective import J_upper_bound
from .scenario import PresetId, preset
from .sensitivity import SensitivityProblem, gradient_check, solve_sensitivity
from .state import BoundaryKind, StateProblem, mass_bound_margin, solve_state

NEG_FLOOR = -1e-10


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  {self.detail}"


def invariant_checks(scenario, result) -> dict:
    """Positivity, growth and boundedness diagnostics for one sweep result."""
    u, m, p = result.u, result.m, result.p
    d = scenario.discretize()
    M = scenario.params.M
    u0_max = float(np.max(d.u0.values))
    j_bound = J_upper_bound(d.u0, scenario.params, scenario.T)
    cap = max(u0_max, M)
    u_max = float(np.max(u.values))
    out = {
        "min_u": float(np.min(u.values)),
        "max_u": u_max,
        "min_p": float(np.min(p.values)),
        "max_p": float(np.max(p.values)),
        "max_grad_p": gradient_bound(p),
        "min_m": float(np.min(m.values)),
        "max_m": float(np.max(m.values)),
        "mass_bound_margin": mass_bound_margin(u, M),
        "J_bound": j_bound,
        "J_bound_margin": j_bound - result.report.final_J,
        "u_cap": cap,
        "u_cap_ok": u_max <= cap + 1e-6,
        "u_cap_relaxed_ok": u_max <= 10.0 * cap,
    }
    out["ok"] = bool(
        out["min_u"] >= NEG_FLOOR
        and out["min_p"] >= NEG_FLOOR
        and out["mass_bound_margin"] >= 0.0
        and out["J_bound_margin"] >= 0.0
        and math.isfinite(out["max_p"])
        and math.isfinite(out["max_grad_p"])
        and out["min_m"] >= 0.0
        and out["max_m"] <= M
    )
    return out


def uniform_grid(nx: int, T: float = 1.0, mu: float = 0.2, h_max: float = 0.0, safety: float = 0.9) -> Grid1D:
    dx = 1.0 / (nx - 1)
    return Grid1D(nx, int(math.ceil(T / stable_dt(mu, dx, h_max, safety))) + 1, T)


def riccati_check(nx: int = 65, m_value: float = 0.0) -> tuple[float, float]:
    """Spatially uniform run from ``u0 = 1``; returns (max relative error at t=1, exact)."""
    g = uniform_grid(nx)
    u = solve_state(StateProblem(0.2, g, Field.zeros(g), Field.constant(g, m_value), SpaceProfile(g, np.ones(nx))))
    if m_value == 0.0:
        exact = 1.0 / (1.0 + g.T)
    else:
        e = math.exp(m_value * g.T)
        exact = m_value * e / (m_value + (e - 1.0))
    return float(np.max(np.abs(u.values[-1] - exact)) / exact), exact


def mms_errors(nxs=(33, 65, 129), mu: float = 0.2) -> list[float]:
    """L-infinity errors against ``u = 2 + exp(-mu pi^2 t) cos(pi x)`` with h = m = 0."""
    errs = []
    for nx in nxs:
        g = uniform_grid(nx, mu=mu)
        X, Tt = np.meshgrid(g.x, g.t)
        exact = 2.0 + np.exp(-mu * np.pi**2 * Tt) * np.cos(np.pi * X)
        # g = -u (m - u) with m = 0 cancels the logistic term
        prob = StateProblem(mu, g, Field.zeros(g), Field.zeros(g), SpaceProfile(g, exact[0]), source=Field(g, exact**2))
        errs.append(float(np.max(np.abs(solve_state(prob).values - exact))))
    return errs


def adjoint_trivial_error(nx: int = 33, T: float = 1.0) -> float:
    g = uniform_grid(nx, T=T)
    z = Field.zeros(g)
    p = solve_adjoint(AdjointProblem(0.2, g, z, z, z, BoundaryKind.NO_FLUX))
    return float(np.max(np.abs(p.values - (g.T - g.t)[:, None])))


def smooth_directions(grid: Grid1D) -> dict[str, Field]:
    X, Tt = np.meshgrid(grid.x, grid.t)
    return {
        "constant": Field.constant(grid, 1.0),
        "cos(pi x)": Field(grid, np.cos(np.pi * X)),
        "sin(pi t) cos(2 pi x)": Field(grid, np.sin(np.pi * Tt) * np.cos(2 * np.pi * X)),
        "bump(x=0.3)*(1-t)": Field(grid, np.exp(-20.0 * (X - 0.3) ** 2) * (1.0 - Tt)),
    }


def analytic_suite() -> list[Check]:
    out = []
    err, exact = riccati_check(65, 0.0)
    out.append(Check("state: Riccati u0=1, m=0", err <= 1e-3, f"u(.,1)~{exact:.6f}, rel err {err:.2e} (tol 1e-3)"))
    err, exact = riccati_check(65, 2.0)
    out.append(Check("state: logistic u0=1, m=2", err <= 1e-3, f"u(.,1)~{exact:.6f}, rel err {err:.2e} (tol 1e-3)"))
    errs = mms_errors()
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    out.append(
        Check(
            "state: manufactured solution convergence",
            all(r >= 3.5 for r in ratios),
            "errors " + ", ".join(f"{e:.3e}" for e in errs) + " ratios " + ", ".join(f"{r:.2f}" for r in ratios),
        )
    )
    err = adjoint_trivial_error()
    out.append(Check("adjoint: p = T - t for u=m=h=0", err <= 1e-10, f"max err {err:.2e} (tol 1e-10)"))
    return out


def gradient_suite(preset_id: PresetId = PresetId.NEU_H1, m_value: float = 1.0, eps: float = 1e-3) -> list[Check]:
    s = preset(preset_id)
    g = s.grid
    m = Field.constant(g, m_value)
    base = s.state_problem(m)
    dirs = smooth_directions(g)
    out = []
    for c in gradient_check(base, s.params, m, dirs, eps):
        out.append(
            Check(
                f"gradient: {preset_id.value} direction {c.label}",
                c.passed(0.02),
                f"fd {c.fd:.6e} adjoint {c.pairing:.6e} rel err {c.rel_error:.2e} (tol 2e-2)",
            )
        )
    u = solve_state(base)
    for label, l in list(dirs.items())[:2]:
        phi = solve_sensitivity(SensitivityProblem(s.mu, g, base.h, m, u, l, s.boundary))
        u_eps = solve_state(s.state_problem(m + eps * l))
        rel = l2_norm((u_eps - u) * (1.0 / eps) - phi) / l2_norm(phi)
        out.append(Check(f"sensitivity: {preset_id.value} direction {label}", rel <= 0.05, f"rel L2 err {rel:.2e} (tol 5e-2)"))
    return out


def invariant_suite(preset_ids=None) -> list[Check]:
    from .fbsweep import run_fbs

    out = []
    for pid in preset_ids or list(PresetId):
        s = preset(pid)
        res = run_fbs(s)
        inv = invariant_checks(s, res)
        out.append(
            Check(
                f"invariants: {pid.value}",
                inv["ok"],
                f"min u {inv['min_u']:.2e}, min p {inv['min_p']:.2e}, mass margin {inv['mass_bound_margin']:.3g}, "
                f"J margin {inv['J_bound_margin']:.3g}, converged={res.report.converged} in {res.report.iterations}",
            )
        )
    return out


SUITES = {
    "analytic": analytic_suite,
    "gradient": gradient_suite,
    "invariants": invariant_suite,
}


def run_suite(name: str) -> list[Check]:
    if name == "all":
        return [c for fn in SUITES.values() for c in fn()]
    return SUITES[name]()
