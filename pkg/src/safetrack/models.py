"""Planar vehicle kinematics and their strict-feedback (position/velocity) form.

Every vehicle is reduced to ``p' = upsilon``, ``upsilon' = f + h (u + d)``
with ``p, upsilon`` in R^2.  The functions here produce ``(p, upsilon)`` from
the native state, the drift ``f`` and input matrix ``h``, and the regularity
bounds on the singular values of ``h`` for the Ackermann model.

Native state vectors used by the simulator:

* Ackermann: ``[x, y, v, delta1, delta3]`` (heading, steering angle)
* differential drive: ``[x, y, v, theta]``
* double integrator: ``[x, y, vx, vy]``
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .exceptions import DomainError, InvalidInputError, SingularityError

#: speeds below this make the ground-vehicle input matrix singular
V_SINGULAR = 1e-9


def _check_finite(*values):
    for val in values:
        if not np.all(np.isfinite(val)):
            raise InvalidInputError(f"non-finite input: {val!r}")


def _vec2(x, name="vector"):
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.shape != (2,):
        raise InvalidInputError(f"{name} must have 2 components, got shape {arr.shape}")
    _check_finite(arr)
    return arr


# --------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class AckermannParams:
    """Kinematic bicycle parameters.

    ``a_max`` bounds the longitudinal acceleration input and
    ``steer_rate_max`` the steering-rate input; both define the box ``U``.
    """

    l_f: float
    l_r: float
    v_min: float
    v_max: float
    delta3_max: float
    a_max: float = 2.0
    steer_rate_max: float = 3.0

    def __post_init__(self):
        _check_finite(self.l_f, self.l_r, self.v_min, self.v_max, self.delta3_max,
                      self.a_max, self.steer_rate_max)
        if self.l_f <= 0 or self.l_r <= 0:
            raise InvalidInputError("axle distances must be positive")
        if not 0 < self.v_min < self.v_max:
            raise InvalidInputError("need 0 < v_min < v_max")
        if not 0 < self.delta3_max < math.pi / 2:
            raise InvalidInputError("need 0 < delta3_max < pi/2")
        if self.a_max <= 0 or self.steer_rate_max <= 0:
            raise InvalidInputError("input bounds must be positive")

    @property
    def kappa(self) -> float:
        """Rear-axle ratio ``l_r / (l_r + l_f)``."""
        return self.l_r / (self.l_r + self.l_f)

    @property
    def input_bounds(self) -> tuple[float, float]:
        return (self.a_max, self.steer_rate_max)


@dataclass(frozen=True)
class DiffDriveParams:
    v_min: float
    v_max: float
    omega_max: float
    a_max: float = 1.0

    def __post_init__(self):
        _check_finite(self.v_min, self.v_max, self.omega_max, self.a_max)
        if not 0 < self.v_min < self.v_max:
            raise InvalidInputError("need 0 < v_min < v_max")
        if self.omega_max <= 0 or self.a_max <= 0:
            raise InvalidInputError("omega_max and a_max must be positive")

    @property
    def input_bounds(self) -> tuple[float, float]:
        return (self.a_max, self.omega_max)


@dataclass(frozen=True)
class DoubleIntegratorParams:
    a_max: float

    def __post_init__(self):
        _check_finite(self.a_max)
        if self.a_max <= 0:
            raise InvalidInputError("a_max must be positive")

    @property
    def input_bounds(self) -> tuple[float, float]:
        return (self.a_max, self.a_max)


VehicleParams = Union[AckermannParams, DiffDriveParams, DoubleIntegratorParams]


# --------------------------------------------------------------------------
# states


@dataclass(frozen=True)
class AckermannState:
    p: np.ndarray
    v: float
    delta1: float
    delta3: float

    def __post_init__(self):
        object.__setattr__(self, "p", _vec2(self.p, "p"))
        _check_finite(self.v, self.delta1, self.delta3)

    def as_array(self) -> np.ndarray:
        return np.array([self.p[0], self.p[1], self.v, self.delta1, self.delta3])

    @classmethod
    def from_array(cls, x) -> "AckermannState":
        return cls(p=x[:2], v=float(x[2]), delta1=float(x[3]), delta3=float(x[4]))


@dataclass(frozen=True)
class DiffDriveState:
    p: np.ndarray
    v: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "p", _vec2(self.p, "p"))
        _check_finite(self.v, self.theta)

    def as_array(self) -> np.ndarray:
        return np.array([self.p[0], self.p[1], self.v, self.theta])

    @classmethod
    def from_array(cls, x) -> "DiffDriveState":
        return cls(p=x[:2], v=float(x[2]), theta=float(x[3]))


@dataclass(frozen=True)
class DoubleIntegratorState:
    p: np.ndarray
    upsilon: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _vec2(self.p, "p"))
        object.__setattr__(self, "upsilon", _vec2(self.upsilon, "upsilon"))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.p, self.upsilon])

    @classmethod
    def from_array(cls, x) -> "DoubleIntegratorState":
        return cls(p=x[:2], upsilon=x[2:4])


def _state_eq(self, other):
    if type(self) is not type(other):
        return NotImplemented
    return bool(np.array_equal(self.as_array(), other.as_array()))


def _state_hash(self):
    return hash((type(self).__name__, self.as_array().tobytes()))


for _cls in (AckermannState, DiffDriveState, DoubleIntegratorState):
    _cls.__eq__ = _state_eq
    _cls.__hash__ = _state_hash

VehicleState = Union[AckermannState, DiffDriveState, DoubleIntegratorState]

STATE_TYPES = {
    "ackermann": AckermannState,
    "diff_drive": DiffDriveState,
    "double_integrator": DoubleIntegratorState,
}

#: native-vector column names, in order
STATE_FIELDS = {
    "ackermann": ("x", "y", "v", "delta1", "delta3"),
    "diff_drive": ("x", "y", "v", "theta"),
    "double_integrator": ("x", "y", "vx", "vy"),
}


def vehicle_kind(obj) -> str:
    """Return the registry key for a state or params instance."""
    if isinstance(obj, (AckermannState, AckermannParams)):
        return "ackermann"
    if isinstance(obj, (DiffDriveState, DiffDriveParams)):
        return "diff_drive"
    if isinstance(obj, (DoubleIntegratorState, DoubleIntegratorParams)):
        return "double_integrator"
    raise TypeError(f"not a vehicle state or params: {type(obj).__name__}")


@dataclass(frozen=True)
class CanonicalState:
    p: np.ndarray
    upsilon: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _vec2(self.p, "p"))
        object.__setattr__(self, "upsilon", _vec2(self.upsilon, "upsilon"))


@dataclass(frozen=True)
class AffineDynamics:
    """Drift ``f_upsilon`` and input matrix ``h_upsilon`` at one state."""

    f_upsilon: np.ndarray
    h_upsilon: np.ndarray = field(repr=True)


# --------------------------------------------------------------------------
# Ackermann geometry


def slip_angle(delta3, params: AckermannParams):
    """Slip angle ``atan(kappa * tan(delta3))`` induced by the steering angle."""
    delta3 = np.asarray(delta3, dtype=float)
    _check_finite(delta3)
    if np.any(np.abs(delta3) >= math.pi / 2):
        raise DomainError("|delta3| must be below pi/2")
    out = np.arctan(params.kappa * np.tan(delta3))
    return float(out) if out.ndim == 0 else out


def curvature_factor(delta3, params: AckermannParams):
    """Factor ``K(delta3)`` scaling the steering column of the input matrix.

    Equals ``d(delta2)/d(delta3)``; ``K(0) = kappa`` and it grows strictly
    with ``|delta3|``.
    """
    delta3 = np.asarray(delta3, dtype=float)
    _check_finite(delta3)
    if np.any(np.abs(delta3) >= math.pi / 2):
        raise DomainError("|delta3| must be below pi/2")
    kappa = params.kappa
    tan2 = np.tan(delta3) ** 2
    out = kappa * (1.0 + tan2) / (1.0 + kappa**2 * tan2)
    return float(out) if out.ndim == 0 else out


def ackermann_input_matrix(v, delta1, delta3, params: AckermannParams) -> np.ndarray:
    """Vectorized Ackermann ``h_upsilon``; returns shape ``(..., 2, 2)``."""
    v = np.asarray(v, dtype=float)
    psi = np.asarray(delta1, dtype=float) + slip_angle(delta3, params)
    kv = curvature_factor(delta3, params) * v
    c, s = np.cos(psi), np.sin(psi)
    h = np.empty(np.broadcast(v, psi).shape + (2, 2))
    h[..., 0, 0] = c
    h[..., 0, 1] = -kv * s
    h[..., 1, 0] = s
    h[..., 1, 1] = kv * c
    return h


# --------------------------------------------------------------------------
# canonical transformation


def _require_params(state, params):
    if isinstance(state, AckermannState) and not isinstance(params, AckermannParams):
        raise InvalidInputError("Ackermann states need AckermannParams")


def to_canonical(state: VehicleState, params: VehicleParams | None = None) -> CanonicalState:
    """Map a native state to its position/velocity pair."""
    if isinstance(state, AckermannState):
        _require_params(state, params)
        psi = state.delta1 + slip_angle(state.delta3, params)
        ups = state.v * np.array([math.cos(psi), math.sin(psi)])
    elif isinstance(state, DiffDriveState):
        ups = state.v * np.array([math.cos(state.theta), math.sin(state.theta)])
    elif isinstance(state, DoubleIntegratorState):
        ups = state.upsilon
    else:
        raise TypeError(f"unsupported state type {type(state).__name__}")
    return CanonicalState(p=state.p, upsilon=ups)


def affine_terms(state: VehicleState, params: VehicleParams | None = None) -> AffineDynamics:
    """Drift and input matrix of the velocity dynamics at ``state``.

    Raises:
        SingularityError: ground vehicle with ``|v| < 1e-9``.
    """
    if isinstance(state, DoubleIntegratorState):
        return AffineDynamics(np.zeros(2), np.eye(2))
    if abs(state.v) < V_SINGULAR:
        raise SingularityError(f"input matrix singular at v={state.v!r}")
    v = state.v
    if isinstance(state, AckermannState):
        _require_params(state, params)
        delta2 = slip_angle(state.delta3, params)
        psi = state.delta1 + delta2
        c, s = math.cos(psi), math.sin(psi)
        kv = curvature_factor(state.delta3, params) * v
        f = (v * v / params.l_r) * math.sin(delta2) * np.array([-s, c])
        h = np.array([[c, -kv * s], [s, kv * c]])
        return AffineDynamics(f, h)
    if isinstance(state, DiffDriveState):
        c, s = math.cos(state.theta), math.sin(state.theta)
        return AffineDynamics(np.zeros(2), np.array([[c, -v * s], [s, v * c]]))
    raise TypeError(f"unsupported state type {type(state).__name__}")


def native_derivative(kind: str, x: np.ndarray, w, params: VehicleParams | None = None) -> np.ndarray:
    """Time derivative of a native state vector under total input ``w = u + d``.

    Scalar-math implementation; this is the simulator's inner loop.
    """
    w1, w2 = float(w[0]), float(w[1])
    if kind == "ackermann":
        _, _, v, d1, d3 = x
        kappa = params.kappa
        d2 = math.atan(kappa * math.tan(d3))
        psi = d1 + d2
        return np.array([v * math.cos(psi), v * math.sin(psi), w1,
                         v / params.l_r * math.sin(d2), w2])
    if kind == "diff_drive":
        _, _, v, th = x
        return np.array([v * math.cos(th), v * math.sin(th), w1, w2])
    if kind == "double_integrator":
        return np.array([x[2], x[3], w1, w2])
    raise ValueError(f"unknown vehicle kind {kind!r}")


def state_derivative(state: VehicleState, u, d, params: VehicleParams | None = None) -> np.ndarray:
    """Native-coordinate derivative with the disturbance added to ``u``.

    Returned in the order of :data:`STATE_FIELDS` for the state's kind.
    """
    u = _vec2(u, "u")
    d = _vec2(d, "d")
    _require_params(state, params)
    return native_derivative(vehicle_kind(state), state.as_array(), u + d, params)


# --------------------------------------------------------------------------
# singular values


def singular_values(h):
    """Closed-form singular values of 2x2 matrices, ascending.

    Accepts a single ``(2, 2)`` matrix or a stack ``(..., 2, 2)``.
    """
    h = np.asarray(h, dtype=float)
    a, b = h[..., 0, 0], h[..., 0, 1]
    c, d = h[..., 1, 0], h[..., 1, 1]
    q = np.hypot(a + d, b - c)
    r = np.hypot(a - d, b + c)
    smax = 0.5 * (q + r)
    smin = 0.5 * np.abs(q - r)
    if smin.ndim == 0:
        return float(smin), float(smax)
    return smin, smax


def sigma_bounds(params: VehicleParams) -> tuple[float, float]:
    """Uniform ``(lower, upper)`` bounds on the singular values of ``h_upsilon``
    over the admissible set.

    Ackermann: ``v in [v_min, v_max]``, ``|delta3| <= delta3_max``.  The
    unicycle matrix has singular values ``{1, |v|}``; the double integrator
    has ``h = I``.
    """
    if isinstance(params, AckermannParams):
        lower = min(1.0, params.kappa * params.v_min)
        upper = max(1.0, curvature_factor(params.delta3_max, params) * params.v_max)
        return lower, float(upper)
    if isinstance(params, DiffDriveParams):
        return min(1.0, params.v_min), max(1.0, params.v_max)
    if isinstance(params, DoubleIntegratorParams):
        return 1.0, 1.0
    raise TypeError(f"unsupported params type {type(params).__name__}")


def sigma_max_bound(params: VehicleParams) -> float:
    """Upper bound of ``sigma_max(h_upsilon)`` on the admissible set."""
    return sigma_bounds(params)[1]
