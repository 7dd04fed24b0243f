"""Closed-loop simulation: sliding-mode law filtered by the barrier QP.

The controller runs every ``control_period`` and its output is held constant
while the native dynamics are integrated with RK4 at ``dt_physics``.
Barrier values and clearances for the metrics are sampled at the physics rate.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..cbf import c3bf_row, obstacle_state, soft_rows
from ..exceptions import InCollisionError, SafetrackError
from ..models import (
    STATE_FIELDS,
    STATE_TYPES,
    affine_terms,
    native_derivative,
    to_canonical,
)
from ..qp import OPTIMAL, ActiveSetSolver, QpProblem, QpSolution
from ..smc import GainReport, smc_control, surface_value, tracking_error, validate_gain
from .disturbance import DisturbanceProcess
from .reference import reference
from .scenario import Scenario

log = logging.getLogger(__name__)

SAFETY_TOL = 1e-3
SLACK_ACTIVE_TOL = 1e-9


class SimulationAborted(SafetrackError):
    """A control step could not be computed; carries the partial trace."""

    def __init__(self, step: int, t: float, cause: Exception, trace: "Trace"):
        super().__init__(f"aborted at control step {step} (t={t:.4f} s): {cause}")
        self.step = step
        self.t = t
        self.cause = cause
        self.trace = trace


@dataclass(frozen=True)
class StepResult:
    """Everything computed during one control update."""

    u_star: np.ndarray
    u_smc: np.ndarray
    S: np.ndarray
    e1: np.ndarray
    p: np.ndarray
    upsilon: np.ndarray
    h_c3bf: tuple[float, ...]
    distance: tuple[float, ...]
    slacks: tuple[float, ...]
    qp_status: str
    active_set: tuple[int, ...]
    problem: QpProblem
    solution: QpSolution
    held: bool


@dataclass(frozen=True)
class TraceRow:
    t: float
    native: np.ndarray
    p: np.ndarray
    upsilon: np.ndarray
    u_smc: np.ndarray
    u_star: np.ndarray
    d: np.ndarray
    S: np.ndarray
    e1: np.ndarray
    h_c3bf: tuple[float, ...]
    distance: tuple[float, ...]
    slacks: tuple[float, ...]
    qp_status: str
    active_set: tuple[int, ...]


@dataclass
class Trace:
    kind: str
    n_obstacles: int
    soft_kinds: tuple[str, ...]
    rows: list[TraceRow] = field(default_factory=list)
    final_state: np.ndarray | None = None
    min_h_physics: float | None = None
    min_clearance_physics: float | None = None

    def header(self) -> list[str]:
        return trace_header(self.kind, self.n_obstacles, self.soft_kinds)

    def records(self):
        """Rows as flat lists matching :meth:`header`."""
        for r in self.rows:
            yield (
                [r.t, *r.native, *r.p, *r.upsilon, *r.u_smc, *r.u_star, *r.d, *r.S, *r.e1,
                 *r.h_c3bf, *r.distance, *r.slacks, r.qp_status,
                 ";".join(str(j) for j in r.active_set)]
            )


def trace_header(kind: str, n_obstacles: int, soft_kinds) -> list[str]:
    cols = ["t"]
    cols += list(STATE_FIELDS[kind])
    cols += ["p_x", "p_y", "upsilon_x", "upsilon_y",
             "u_smc_1", "u_smc_2", "u_star_1", "u_star_2", "d_1", "d_2",
             "S_1", "S_2", "e1_x", "e1_y"]
    cols += [f"h_c3bf_{i}" for i in range(n_obstacles)]
    cols += [f"distance_{i}" for i in range(n_obstacles)]
    cols += [f"slack_{k}" for k in soft_kinds]
    cols += ["qp_status", "active_set"]
    return cols


@dataclass(frozen=True)
class Metrics:
    rms_e1_post_reach: float | None
    max_e1: float | None
    reaching_time_measured: float | None
    min_h_c3bf: float | None
    min_clearance: float | None
    qp_infeasible_count: int
    slack_activation_count: int
    gain_check: GainReport

    @property
    def safe(self) -> bool:
        if self.min_h_c3bf is not None and self.min_h_c3bf < -SAFETY_TOL:
            return False
        if self.min_clearance is not None and self.min_clearance <= 0:
            return False
        return True

    def as_dict(self) -> dict:
        return {
            "rms_e1_post_reach": self.rms_e1_post_reach,
            "max_e1": self.max_e1,
            "reaching_time_measured": self.reaching_time_measured,
            "min_h_c3bf": self.min_h_c3bf,
            "min_clearance": self.min_clearance,
            "qp_infeasible_count": self.qp_infeasible_count,
            "slack_activation_count": self.slack_activation_count,
            "gain_check": self.gain_check.as_dict(),
            "safe": self.safe,
        }


# --------------------------------------------------------------------------
# control step


def _box_rows(bounds, n):
    rows, rhs = [], []
    for axis, ub in enumerate(bounds):
        for sign in (1.0, -1.0):
            a = np.zeros(n)
            a[axis] = sign
            rows.append(a)
            rhs.append(-ub)
    return rows, rhs


def control_step(
    scenario: Scenario,
    state,
    t: float,
    solver: ActiveSetSolver | None = None,
    u_prev=None,
) -> StepResult:
    """Compute the filtered input for ``state`` at time ``t``.

    Raises:
        SingularityError: the velocity input matrix is singular.
    """
    params = scenario.params
    solver = solver or ActiveSetSolver()
    c = to_canonical(state, params)
    dyn = affine_terms(state, params)
    ref = reference(scenario.reference, t)
    err = tracking_error(c, ref)
    S = surface_value(scenario.surface, err)
    u_smc = smc_control(dyn, ref, err, scenario.surface, scenario.gains)

    bar = scenario.barriers
    d_bar = scenario.d_bar
    hard_a, hard_b, labels = [], [], []
    h_vals, dists = [], []
    for i, obs in enumerate(scenario.obstacles):
        os = obstacle_state(obs, t)
        r_eff = obs.radius_obs + bar.ego_radius
        dist = float(np.linalg.norm(os.p_obs - c.p))
        dists.append(dist)
        try:
            row = c3bf_row(c, dyn, os, r_eff, bar.alpha_c3bf, d_bar)
        except InCollisionError:
            log.warning("t=%.3f: inside obstacle %d, collision-cone row skipped", t, i)
            h_vals.append(math.nan)
            continue
        h_vals.append(row.h_value)
        if row.degenerate_flag:
            log.warning("t=%.3f: degenerate collision-cone row for obstacle %d dropped", t, i)
            continue
        hard_a.append(row.a)
        hard_b.append(-row.b)
        labels.append(f"c3bf_{i}")

    specs = scenario.soft_barriers
    softs = soft_rows(state, dyn, c, specs, d_bar, scenario.soft_bounds)
    ns = len(softs)
    n = 2 + ns
    A, b = [], []
    for a, bb in zip(hard_a, hard_b):
        A.append(np.concatenate([a, np.zeros(ns)]))
        b.append(bb)
    for i, sr in enumerate(softs):
        row = np.zeros(n)
        row[:2] = sr.a
        row[2 + i] = 1.0
        A.append(row)
        b.append(sr.rhs)
        labels.append(f"soft_{sr.kind}")
    box_a, box_b = _box_rows(params.input_bounds, n)
    A += box_a
    b += box_b
    labels += ["u1_min", "u1_max", "u2_min", "u2_max"]
    for i in range(ns):
        row = np.zeros(n)
        row[2 + i] = 1.0
        A.append(row)
        b.append(0.0)
        labels.append(f"slack_{specs[i].kind}_nonneg")

    H = np.concatenate([np.ones(2), np.full(ns, bar.rho)])
    g = np.concatenate([-u_smc, np.zeros(ns)])
    problem = QpProblem(H=H, g=g, A=np.array(A).reshape(-1, n), b=np.array(b), labels=tuple(labels))
    sol = solver.solve(problem)
    held = sol.status != OPTIMAL
    if held:
        log.warning("t=%.3f: QP %s, holding previous input", t, sol.status)
        u_star = np.zeros(2) if u_prev is None else np.array(u_prev, dtype=float)
        slacks = tuple(math.nan for _ in range(ns))
    else:
        u_star = sol.x_star[:2].copy()
        slacks = tuple(float(s) for s in sol.x_star[2:])
    return StepResult(
        u_star=u_star, u_smc=u_smc, S=S, e1=err.e1, p=c.p, upsilon=c.upsilon,
        h_c3bf=tuple(h_vals), distance=tuple(dists), slacks=slacks,
        qp_status=sol.status, active_set=sol.active_set, problem=problem, solution=sol,
        held=held,
    )


# --------------------------------------------------------------------------
# integration


def rk4_step(fun, x: np.ndarray, t: float, dt: float) -> np.ndarray:
    k1 = fun(t, x)
    k2 = fun(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = fun(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = fun(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _canonical_fast(kind, x, params):
    if kind == "ackermann":
        psi = x[3] + math.atan(params.kappa * math.tan(x[4]))
        return x[0], x[1], x[2] * math.cos(psi), x[2] * math.sin(psi)
    if kind == "diff_drive":
        return x[0], x[1], x[2] * math.cos(x[3]), x[2] * math.sin(x[3])
    return x[0], x[1], x[2], x[3]


def _barrier_samples(scenario, kind, x, t):
    """(h, clearance) per obstacle; h is None inside the obstacle."""
    px, py, vx, vy = _canonical_fast(kind, x, scenario.params)
    out = []
    for obs in scenario.obstacles:
        os = obstacle_state(obs, t)
        r_eff = obs.radius_obs + scenario.barriers.ego_radius
        prx, pry = os.p_obs[0] - px, os.p_obs[1] - py
        vrx, vry = os.v_obs_t[0] - vx, os.v_obs_t[1] - vy
        d2 = prx * prx + pry * pry
        clearance = math.sqrt(d2) - r_eff
        if d2 <= r_eff * r_eff:
            out.append((None, clearance))
            continue
        h = prx * vrx + pry * vry + math.hypot(vrx, vry) * math.sqrt(d2 - r_eff * r_eff)
        out.append((h, clearance))
    return out


def _state_from(kind, x):
    return STATE_TYPES[kind].from_array(x)


def run(scenario: Scenario, solver: ActiveSetSolver | None = None) -> tuple[Trace, Metrics]:
    """Simulate ``scenario`` and return its trace and metrics.

    Deterministic: the same scenario (and seed) yields bitwise-identical output.

    Raises:
        SimulationAborted: a control step failed (e.g. singular dynamics).
    """
    kind = scenario.kind
    params = scenario.params
    solver = solver or ActiveSetSolver()
    solver.reset()
    process = DisturbanceProcess(scenario.disturbance, seed=scenario.seed)
    soft_kinds = tuple(s.kind for s in scenario.soft_barriers)
    trace = Trace(kind=kind, n_obstacles=len(scenario.obstacles), soft_kinds=soft_kinds)

    x = scenario.initial_state.as_array().astype(float)
    dt = scenario.dt_physics
    cp = scenario.control_period
    sub = scenario.substeps

    min_h = math.inf
    min_clear = math.inf

    def record(xv, tv):
        nonlocal min_h, min_clear
        for h, clr in _barrier_samples(scenario, kind, xv, tv):
            if h is not None:
                min_h = min(min_h, float(h))
            min_clear = min(min_clear, float(clr))

    if scenario.n_control_steps:
        record(x, 0.0)
    u_prev = None
    infeasible = 0
    slack_steps = 0
    for k in range(scenario.n_control_steps):
        t = k * cp
        state = _state_from(kind, x)
        try:
            step = control_step(scenario, state, t, solver, u_prev)
        except SafetrackError as exc:
            trace.final_state = x
            _finalize_physics(trace, min_h, min_clear)
            raise SimulationAborted(k, t, exc, trace) from exc
        if step.held:
            infeasible += 1
        if any(s > SLACK_ACTIVE_TOL for s in step.slacks if not math.isnan(s)):
            slack_steps += 1
        u = step.u_star
        u_prev = u
        d_now = process.at(t, k)
        trace.rows.append(TraceRow(
            t=t, native=x.copy(), p=step.p, upsilon=step.upsilon, u_smc=step.u_smc,
            u_star=u, d=d_now, S=step.S, e1=step.e1, h_c3bf=step.h_c3bf,
            distance=step.distance, slacks=step.slacks, qp_status=step.qp_status,
            active_set=step.active_set,
        ))

        def fun(tt, xx, _k=k, _u=u):
            return native_derivative(kind, xx, _u + process.at(tt, _k), params)

        for j in range(sub):
            ts = t + j * dt
            x = rk4_step(fun, x, ts, dt)
            if not np.all(np.isfinite(x)):
                exc = SafetrackError("state became non-finite")
                trace.final_state = x
                raise SimulationAborted(k, ts, exc, trace)
            record(x, t + (j + 1) * dt)

    trace.final_state = x
    _finalize_physics(trace, min_h, min_clear)
    metrics = compute_metrics(scenario, trace, infeasible, slack_steps)
    return trace, metrics


def _finalize_physics(trace, min_h, min_clear):
    trace.min_h_physics = None if math.isinf(min_h) else min_h
    trace.min_clearance_physics = None if math.isinf(min_clear) else min_clear


def gain_report(scenario: Scenario) -> GainReport:
    g = scenario.gains
    return validate_gain(g.K, scenario.params, scenario.d_bar, g.eta)


def compute_metrics(scenario: Scenario, trace: Trace, infeasible: int = 0, slack_steps: int = 0) -> Metrics:
    lam = scenario.gains.lambda_bl
    reach = None
    for r in trace.rows:
        if np.max(np.abs(r.S)) <= lam:
            reach = r.t
            break
    e1n = np.array([np.linalg.norm(r.e1) for r in trace.rows])
    rms = None
    if reach is not None:
        post = np.array([np.linalg.norm(r.e1) for r in trace.rows if r.t >= reach])
        rms = float(np.sqrt(np.mean(post**2)))
    return Metrics(
        rms_e1_post_reach=rms,
        max_e1=float(e1n.max()) if e1n.size else None,
        reaching_time_measured=reach,
        min_h_c3bf=trace.min_h_physics,
        min_clearance=trace.min_clearance_physics,
        qp_infeasible_count=infeasible,
        slack_activation_count=slack_steps,
        gain_check=gain_report(scenario),
    )
