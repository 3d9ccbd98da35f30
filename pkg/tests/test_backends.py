"""Compiled and numpy kernels must agree to round-off."""

import os
import subprocess
import sys

import numpy as np
import pytest

from rda_optctl import kernels
from rda_optctl.adjoint import AdjointProblem, solve_adjoint
from rda_optctl.errors import NegativeDensityError, StabilityError
from rda_optctl.meshgrid import Field, SpaceProfile
from rda_optctl.scenario import PresetId, preset
from rda_optctl.sensitivity import SensitivityProblem, solve_sensitivity
from rda_optctl.state import StateProblem, solve_state
from rda_optctl.verify import uniform_grid

needs_cython = pytest.mark.skipif("cython" not in kernels.available(), reason="compiled extension not built")

TOL = 1e-12


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def test_python_backend_always_available():
    assert "python" in kernels.available()
    assert kernels.get("python").flux_march is not None
    with pytest.raises(ValueError):
        kernels.get("fortran")


@needs_cython
@pytest.mark.parametrize("pid", [PresetId.NEU_H1, PresetId.NEU_H4, PresetId.DIR_H3X, PresetId.DIR_HNEG10X])
def test_state_adjoint_sensitivity_agree(pid):
    s = preset(pid).with_overrides(nx=41)
    g = s.grid
    X, Tt = np.meshgrid(g.x, g.t)
    m = Field(g, 2.0 + np.cos(np.pi * X) * np.sin(np.pi * Tt))
    prob = s.state_problem(m)
    u = {b: solve_state(prob, backend=b) for b in ("python", "cython")}
    assert _rel(u["cython"].values, u["python"].values) <= TOL
    ap = AdjointProblem(s.mu, g, prob.h, m, u["python"], s.boundary)
    p = {b: solve_adjoint(ap, backend=b) for b in ("python", "cython")}
    assert _rel(p["cython"].values, p["python"].values) <= TOL
    sp = SensitivityProblem(s.mu, g, prob.h, m, u["python"], Field(g, np.cos(2 * np.pi * X)), s.boundary)
    phi = {b: solve_sensitivity(sp, backend=b) for b in ("python", "cython")}
    assert _rel(phi["cython"].values, phi["python"].values) <= TOL


@needs_cython
def test_source_term_agrees():
    g = uniform_grid(33)
    X, Tt = np.meshgrid(g.x, g.t)
    exact = 2.0 + np.exp(-0.2 * np.pi**2 * Tt) * np.cos(np.pi * X)
    prob = StateProblem(0.2, g, Field.zeros(g), Field.zeros(g), SpaceProfile(g, exact[0]), source=Field(g, exact**2))
    a = solve_state(prob, backend="python").values
    b = solve_state(prob, backend="cython").values
    assert _rel(b, a) <= TOL


@needs_cython
@pytest.mark.parametrize("backend", ["python", "cython"])
def test_error_statuses(backend):
    g = uniform_grid(17, T=0.5)
    neg = StateProblem(0.2, g, Field.zeros(g), Field.zeros(g), SpaceProfile(g, np.full(17, 0.01)),
                       source=Field.constant(g, -5.0))
    with pytest.raises(NegativeDensityError) as info:
        solve_state(neg, backend=backend)
    level = info.value.level
    guard = StateProblem(0.2, g, Field.zeros(g), Field.constant(g, 1e4), SpaceProfile(g, np.ones(17)))
    with pytest.raises(StabilityError):
        solve_state(guard, backend=backend)
    assert level == 1


@needs_cython
def test_error_levels_agree():
    g = uniform_grid(17, T=1.0)
    # u' = -u^2 - 0.5 from u = 0.3 crosses zero near t = 0.57
    prob = StateProblem(0.2, g, Field.zeros(g), Field.zeros(g), SpaceProfile(g, np.full(17, 0.3)),
                        source=Field.constant(g, -0.5))
    levels = []
    for b in ("python", "cython"):
        with pytest.raises(NegativeDensityError) as info:
            solve_state(prob, backend=b)
        levels.append(info.value.level)
    assert levels[0] == levels[1]
    assert 1 < levels[0] < g.nt - 1


def test_env_forces_python_backend():
    env = dict(os.environ, RDA_OPTCTL_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from rda_optctl import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_cython
def test_full_sweep_agrees_across_backends():
    code = (
        "import numpy as np, sys;"
        "from rda_optctl.scenario import preset; from rda_optctl.fbsweep import run_fbs;"
        "r = run_fbs(preset('NEU_H1').with_overrides(nx=21));"
        "np.save(sys.argv[1], r.m.values); print(r.report.iterations)"
    )
    outs = {}
    for flag in ("0", "1"):
        path = f"{os.environ.get('TMPDIR', '/tmp')}/rda_backend_{flag}_{os.getpid()}.npy"
        env = dict(os.environ, RDA_OPTCTL_PURE_PYTHON=flag)
        res = subprocess.run([sys.executable, "-c", code, path], env=env, capture_output=True, text=True, check=True)
        outs[flag] = (int(res.stdout), np.load(path))
        os.remove(path)
    assert outs["0"][0] == outs["1"][0]
    assert _rel(outs["0"][1], outs["1"][1]) <= 1e-10
