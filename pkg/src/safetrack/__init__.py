"""Sliding-mode trajectory tracking for planar vehicles with a collision-cone
barrier QP safety filter."""
from .cbf import (
    C3bfRow,
    Circular,
    ConstantVelocity,
    Obstacle,
    SoftBarrierSpec,
    c3bf_gradients,
    c3bf_row,
    c3bf_value,
    obstacle_state,
    soft_rows,
)
from .exceptions import (
    DomainError,
    InCollisionError,
    InvalidInputError,
    SafetrackError,
    ScenarioError,
    SingularityError,
)
from .models import (
    AckermannParams,
    AckermannState,
    DiffDriveParams,
    DiffDriveState,
    DoubleIntegratorParams,
    DoubleIntegratorState,
    affine_terms,
    sigma_bounds,
    singular_values,
    state_derivative,
    to_canonical,
)
from .qp import ActiveSetSolver, QpProblem, QpSolution, brute_force_solve, solve
from .sim.disturbance import NoDisturbance, Sinusoidal, UniformRandom
from .sim.reference import Circle, Lissajous, WaypointSpline
from .sim.runner import Metrics, SimulationAborted, Trace, control_step, run
from .sim.scenario import BarrierConfig, Scenario
from .smc import LinearSurface, NTSMSurface, SmcGains, smc_control, validate_gain

__version__ = "0.1.0"

__all__ = [
    "AckermannParams", "AckermannState", "ActiveSetSolver", "BarrierConfig", "C3bfRow",
    "Circle", "Circular", "ConstantVelocity", "DiffDriveParams", "DiffDriveState",
    "DomainError", "DoubleIntegratorParams", "DoubleIntegratorState", "InCollisionError",
    "InvalidInputError", "LinearSurface", "Lissajous", "Metrics", "NTSMSurface",
    "NoDisturbance", "Obstacle", "QpProblem", "QpSolution", "SafetrackError", "Scenario",
    "ScenarioError", "SimulationAborted", "SingularityError", "Sinusoidal", "SmcGains",
    "SoftBarrierSpec", "Trace", "UniformRandom", "WaypointSpline", "affine_terms",
    "brute_force_solve", "c3bf_gradients", "c3bf_row", "c3bf_value", "control_step",
    "obstacle_state", "run", "sigma_bounds", "singular_values", "smc_control", "soft_rows",
    "solve", "state_derivative", "to_canonical", "validate_gain",
]
