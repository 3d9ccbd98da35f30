"""Optimal resource allocation for a logistic reaction-diffusion-advection population model.

Forward state and backward adjoint solves on a uniform 1D grid, coupled by a
projected forward-backward sweep that maximises ``J(m) = int int (u - B m^2)``.
"""

from .adjoint import AdjointProblem, solve_adjoint
from .errors import ScenarioError, SolverError
from .fbsweep import SweepReport, SweepSettings, control_update, forward_backward_sweep, run_fbs
from .kernels import BACKEND
from .meshgrid import Field, Grid1D, SpaceProfile, integrate_space, integrate_spacetime, l2_norm, linf_norm, stable_dt
from .objective import J_upper_bound, ObjectiveParams, evaluate_J
from .report import read_field_csv, write_field_csv, write_run
from .scenario import PresetId, Scenario, load_scenario, preset
from .sensitivity import SensitivityProblem, adjoint_pairing, directional_derivative_fd, solve_sensitivity
from .state import BoundaryKind, StateProblem, mass_history, solve_state

__version__ = "0.1.0"
