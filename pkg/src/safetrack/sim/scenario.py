"""Immutable description of one closed-loop experiment."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from ..cbf import Obstacle, SoftBarrierSpec
from ..exceptions import ScenarioError
from ..models import (
    AckermannParams,
    DiffDriveParams,
    DoubleIntegratorParams,
    VehicleParams,
    VehicleState,
    vehicle_kind,
)
from ..smc import SlidingSurfaceSpec, SmcGains
from .disturbance import DisturbanceSpec
from .reference import ReferenceSpec

DEFAULT_SOFT_KINDS = {
    "ackermann": ("v_min", "v_max", "delta3"),
    "diff_drive": ("v_min", "v_max"),
    "double_integrator": (),
}


def default_soft_barriers(kind: str) -> tuple[SoftBarrierSpec, ...]:
    return tuple(SoftBarrierSpec(k) for k in DEFAULT_SOFT_KINDS[kind])


@dataclass(frozen=True)
class BarrierConfig:
    """Safety-filter settings.

    ``soft=None`` selects the default soft barriers for the vehicle kind.
    """

    alpha_c3bf: float = 1.0
    soft: tuple[SoftBarrierSpec, ...] | None = None
    rho: float = 1e3
    ego_radius: float = 0.2

    def __post_init__(self):
        if not self.alpha_c3bf > 0:
            raise ScenarioError("alpha_c3bf must be positive")
        if not self.rho > 0:
            raise ScenarioError("rho must be positive")
        if self.ego_radius < 0:
            raise ScenarioError("ego_radius must be non-negative")


@dataclass(frozen=True)
class Scenario:
    params: VehicleParams
    initial_state: VehicleState
    reference: ReferenceSpec
    disturbance: DisturbanceSpec
    surface: SlidingSurfaceSpec
    gains: SmcGains
    duration: float
    obstacles: tuple[Obstacle, ...] = ()
    barriers: BarrierConfig = field(default_factory=BarrierConfig)
    dt_physics: float = 1e-3
    control_period: float = 1e-2
    seed: int = 0
    name: str = "scenario"

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if vehicle_kind(self.params) != vehicle_kind(self.initial_state):
            raise ScenarioError("initial state does not match the vehicle parameters")
        if not self.dt_physics > 0:
            raise ScenarioError("dt_physics must be positive")
        if self.control_period < self.dt_physics:
            raise ScenarioError("control_period must be at least dt_physics")
        ratio = self.control_period / self.dt_physics
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ScenarioError("control_period must be an integer multiple of dt_physics")
        if not (math.isfinite(self.duration) and self.duration >= 0):
            raise ScenarioError("duration must be non-negative")
        missing = [b.kind for b in self.soft_barriers if b.kind not in self.soft_bounds]
        if missing:
            raise ScenarioError(f"soft barriers {missing} not available for {self.kind}")

    @property
    def kind(self) -> str:
        return vehicle_kind(self.params)

    @property
    def d_bar(self) -> float:
        return self.disturbance.d_bar

    @property
    def substeps(self) -> int:
        return int(round(self.control_period / self.dt_physics))

    @property
    def n_control_steps(self) -> int:
        return int(round(self.duration / self.control_period))

    @property
    def soft_barriers(self) -> tuple[SoftBarrierSpec, ...]:
        if self.barriers.soft is None:
            return default_soft_barriers(self.kind)
        return self.barriers.soft

    @property
    def soft_bounds(self) -> dict[str, float]:
        p = self.params
        if isinstance(p, AckermannParams):
            return {"v_min": p.v_min, "v_max": p.v_max, "delta3": p.delta3_max}
        if isinstance(p, DiffDriveParams):
            return {"v_min": p.v_min, "v_max": p.v_max}
        if isinstance(p, DoubleIntegratorParams):
            return {}
        raise TypeError(type(p).__name__)

    def with_overrides(self, **changes) -> "Scenario":
        return replace(self, **changes)
