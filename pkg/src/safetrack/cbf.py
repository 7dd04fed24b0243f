"""Collision-cone barrier with moving obstacles, plus soft actuator barriers.

Constraint rows are produced in the form ``a . u + b >= 0`` (hard collision
cone rows) and ``a . u + slack >= rhs`` (soft rows).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InCollisionError, InvalidInputError
from .models import AckermannState, AffineDynamics, CanonicalState, VehicleState

log = logging.getLogger(__name__)

DEGENERATE_TOL = 1e-9


# --------------------------------------------------------------------------
# obstacles


@dataclass(frozen=True)
class ConstantVelocity:
    p0: tuple[float, float]
    v_obs: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "p0", tuple(float(x) for x in self.p0))
        object.__setattr__(self, "v_obs", tuple(float(x) for x in self.v_obs))


@dataclass(frozen=True)
class Circular:
    """Uniform motion on a circle of radius ``R_c`` about ``p_c``.

    ``v_obs`` is optional; when given it must equal ``|omega_obs| * R_c``.
    """

    p_c: tuple[float, float]
    R_c: float
    omega_obs: float
    theta0: float = 0.0
    v_obs: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "p_c", tuple(float(x) for x in self.p_c))
        if not self.R_c > 0:
            raise InvalidInputError("circle radius R_c must be positive")
        if self.v_obs is not None:
            expected = abs(self.omega_obs) * self.R_c
            if not math.isclose(self.v_obs, expected, rel_tol=1e-9, abs_tol=1e-12):
                raise InvalidInputError(
                    f"circular obstacle speed {self.v_obs} != |omega|*R_c = {expected}")

    @property
    def speed(self) -> float:
        return abs(self.omega_obs) * self.R_c


@dataclass(frozen=True)
class Obstacle:
    radius_obs: float
    motion: ConstantVelocity | Circular

    def __post_init__(self):
        if not self.radius_obs > 0:
            raise InvalidInputError("radius_obs must be positive")


@dataclass(frozen=True)
class ObstacleState:
    p_obs: np.ndarray
    v_obs_t: np.ndarray
    a_obs_t: np.ndarray


def obstacle_state(obs: Obstacle, t: float) -> ObstacleState:
    """Analytic position, velocity and acceleration at time ``t``."""
    m = obs.motion
    if isinstance(m, ConstantVelocity):
        v = np.array(m.v_obs)
        return ObstacleState(np.array(m.p0) + v * t, v, np.zeros(2))
    if isinstance(m, Circular):
        ang = m.omega_obs * t + m.theta0
        c, s = math.cos(ang), math.sin(ang)
        R, w = m.R_c, m.omega_obs
        return ObstacleState(
            np.array([m.p_c[0] + R * c, m.p_c[1] + R * s]),
            np.array([-R * w * s, R * w * c]),
            np.array([-R * w * w * c, -R * w * w * s]),
        )
    raise TypeError(f"unsupported motion model {type(m).__name__}")


# --------------------------------------------------------------------------
# collision cone barrier


def cos_half_angle(p_rel, r):
    """Cosine of the collision-cone half-angle ``sqrt(|p|^2 - r^2) / |p|``."""
    p_rel = np.asarray(p_rel, dtype=float)
    dist = np.linalg.norm(p_rel, axis=-1)
    if np.any(dist <= r):
        raise InCollisionError("relative distance does not exceed the obstacle radius")
    out = np.sqrt(dist**2 - np.asarray(r) ** 2) / dist
    return float(out) if np.ndim(out) == 0 else out


def _tangent_length(p_rel, r):
    dist2 = np.sum(p_rel * p_rel, axis=-1)
    r2 = np.asarray(r, dtype=float) ** 2
    if np.any(dist2 <= r2):
        raise InCollisionError("relative distance does not exceed the obstacle radius")
    return np.sqrt(dist2 - r2)


def c3bf_value(p_rel, v_rel, r):
    """Barrier ``p.v + |p| |v| cos(phi)``; nonnegative iff ``v_rel`` is outside the cone."""
    p_rel = np.asarray(p_rel, dtype=float)
    v_rel = np.asarray(v_rel, dtype=float)
    out = np.sum(p_rel * v_rel, axis=-1) + np.linalg.norm(v_rel, axis=-1) * _tangent_length(p_rel, r)
    return float(out) if np.ndim(out) == 0 else out


def c3bf_gradients(p_rel, v_rel, r):
    """Gradients of :func:`c3bf_value` w.r.t. ``p_rel`` and ``v_rel``.

    ``|p| cos(phi)`` is the tangent length ``sqrt(|p|^2 - r^2)``.  At
    ``v_rel = 0`` the unit-vector factor in the velocity gradient is taken as 0.
    """
    p_rel = np.asarray(p_rel, dtype=float)
    v_rel = np.asarray(v_rel, dtype=float)
    tang = _tangent_length(p_rel, r)[..., None]
    speed = np.linalg.norm(v_rel, axis=-1)[..., None]
    unit_v = np.divide(v_rel, speed, out=np.zeros_like(v_rel), where=speed > 0)
    grad_p = v_rel + speed * p_rel / tang
    grad_v = p_rel + tang * unit_v
    return grad_p, grad_v


@dataclass(frozen=True)
class C3bfRow:
    """Hard constraint ``a . u + b >= 0``."""

    a: np.ndarray
    b: float
    h_value: float
    degenerate_flag: bool


def c3bf_row(
    c: CanonicalState,
    dyn: AffineDynamics,
    os: ObstacleState,
    r_eff: float,
    alpha_gain: float,
    d_bar: float,
) -> C3bfRow:
    """Robust collision-cone constraint on the input at one instant.

    With ``p_rel = p_obs - p`` and ``v_rel = v_obs - upsilon``, the barrier
    derivative is ``grad_p . v_rel + grad_v . (a_obs - f - h (u + d))``.
    The worst-case disturbance term is bounded by ``||a||_1 d_bar``.
    """
    p_rel = os.p_obs - c.p
    v_rel = os.v_obs_t - c.upsilon
    h = c3bf_value(p_rel, v_rel, r_eff)
    grad_p, grad_v = c3bf_gradients(p_rel, v_rel, r_eff)
    a = -(grad_v @ dyn.h_upsilon)
    b = (
        grad_p @ v_rel
        - grad_v @ dyn.f_upsilon
        + grad_v @ os.a_obs_t
        + alpha_gain * h
        - np.abs(a).sum() * d_bar
    )
    return C3bfRow(a=a, b=float(b), h_value=h, degenerate_flag=bool(np.linalg.norm(a) < DEGENERATE_TOL))


# --------------------------------------------------------------------------
# soft barriers


SOFT_KINDS = ("v_min", "v_max", "delta3")


@dataclass(frozen=True)
class SoftBarrierSpec:
    """One relaxed barrier.  ``margin_delta=None`` means ``||L_g h||_1 * d_bar``."""

    kind: str
    alpha_gain: float = 1.0
    margin_delta: float | None = None

    def __post_init__(self):
        if self.kind not in SOFT_KINDS:
            raise InvalidInputError(f"unknown soft barrier kind {self.kind!r}")
        if not self.alpha_gain > 0:
            raise InvalidInputError("alpha_gain must be positive")
        if self.margin_delta is not None and self.margin_delta < 0:
            raise InvalidInputError("margin_delta must be non-negative")


@dataclass(frozen=True)
class SoftRow:
    """Relaxed constraint ``a . u + slack >= rhs``."""

    kind: str
    a: np.ndarray
    rhs: float
    h_value: float


def soft_rows(
    state: VehicleState,
    dyn: AffineDynamics,
    c: CanonicalState,
    specs,
    d_bar: float,
    bounds: dict[str, float],
) -> list[SoftRow]:
    """Build soft rows for ``specs``.

    ``bounds`` maps each kind to its limit (``v_min``, ``v_max`` in m/s,
    ``delta3`` the steering limit in rad).
    """
    ups = c.upsilon
    rows = []
    for spec in specs:
        if spec.kind in ("v_min", "v_max"):
            sign = 1.0 if spec.kind == "v_min" else -1.0
            lim = bounds[spec.kind]
            h = sign * (ups @ ups - lim * lim)
            lf = sign * 2.0 * (ups @ dyn.f_upsilon)
            lg = sign * 2.0 * (ups @ dyn.h_upsilon)
        else:
            if not isinstance(state, AckermannState):
                raise InvalidInputError("steering barrier needs an Ackermann state")
            lim = bounds["delta3"]
            h = lim * lim - state.delta3**2
            lf = 0.0
            lg = np.array([0.0, -2.0 * state.delta3])
        margin = np.abs(lg).sum() * d_bar if spec.margin_delta is None else spec.margin_delta
        rhs = margin - lf - spec.alpha_gain * h
        rows.append(SoftRow(kind=spec.kind, a=np.asarray(lg, dtype=float), rhs=float(rhs), h_value=float(h)))
    return rows
