"""Built-in scenarios for the three case studies.

Vehicle geometry, speed/steering limits, references, disturbance bounds,
switching gains and the circular-obstacle motion are the case-study values.
Initial states, obstacle radii, acceleration/steering-rate bounds, the
crossing obstacle of the Ackermann run and the whole drone circle are
choices made here.
"""
from __future__ import annotations

import math

from ..cbf import Circular, ConstantVelocity, Obstacle, SoftBarrierSpec
from ..models import (
    AckermannParams,
    AckermannState,
    DiffDriveParams,
    DiffDriveState,
    DoubleIntegratorParams,
    DoubleIntegratorState,
)
from ..sim.disturbance import Sinusoidal
from ..sim.reference import Circle, Lissajous
from ..sim.scenario import BarrierConfig, Scenario
from ..smc import LinearSurface, NTSMSurface, SmcGains

PRESET_IDS = ("f1tenth_circle", "turtlebot_lissajous", "drone_circle")

# With gain 1 the robust margin ||L_g h||_1 * d_bar pins the steering
# barrier's equilibrium near 0.25 rad, below the ~0.32 rad the 1 m circle needs.
SOFT_ALPHA = 10.0


def _soft(kinds):
    return tuple(SoftBarrierSpec(k, alpha_gain=SOFT_ALPHA) for k in kinds)


def f1tenth_circle() -> Scenario:
    params = AckermannParams(
        l_f=0.17145, l_r=0.15875, v_min=0.25, v_max=3.0, delta3_max=0.4,
        a_max=2.0, steer_rate_max=3.0,
    )
    return Scenario(
        name="f1tenth_circle",
        params=params,
        initial_state=AckermannState(p=(2.3, 1.5), v=0.5, delta1=math.pi / 2, delta3=0.0),
        reference=Circle(center=(1.58, 1.78), radius=1.0, omega=0.2 * math.pi),
        disturbance=Sinusoidal(d_bar=0.2, amp=(0.2, 0.2), freq=(1.0, 1.7), phase=(0.0, 0.5)),
        surface=LinearSurface((1.0, 1.0)),
        gains=SmcGains(K=1.0, eta=0.01, lambda_bl=0.05),
        obstacles=(
            Obstacle(radius_obs=0.15,
                     motion=ConstantVelocity(p0=(1.58, -1.0), v_obs=(0.0, 0.08))),
        ),
        barriers=BarrierConfig(
            alpha_c3bf=1.0,
            soft=_soft(("v_min", "v_max", "delta3")),
            rho=1e6,
            ego_radius=0.2,
        ),
        duration=60.0,
    )


def turtlebot_lissajous() -> Scenario:
    params = DiffDriveParams(v_min=0.01, v_max=0.2, omega_max=2.0, a_max=1.0)
    return Scenario(
        name="turtlebot_lissajous",
        params=params,
        initial_state=DiffDriveState(p=(2.2, 2.45), v=0.2, theta=0.0),
        reference=Lissajous(
            center=(2.2, 1.5), amp=(1.8, 0.95),
            omega=(0.23 * math.pi, 0.15 * math.pi), phase=(0.0, math.pi / 2),
        ),
        disturbance=Sinusoidal(d_bar=0.1, amp=(0.1, 0.1), freq=(1.0, 1.7), phase=(0.0, 0.5)),
        surface=NTSMSurface(beta=(1.0, 1.0), p_exp=5, q_exp=3),
        gains=SmcGains(K=0.3, eta=0.01, lambda_bl=0.05),
        obstacles=(
            Obstacle(radius_obs=0.15,
                     motion=Circular(p_c=(2.5, 1.75), R_c=0.8, omega_obs=0.2,
                                     theta0=math.pi, v_obs=0.16)),
        ),
        barriers=BarrierConfig(
            alpha_c3bf=1.0,
            soft=_soft(("v_min", "v_max")),
            rho=1e6,
            ego_radius=0.2,
        ),
        duration=60.0,
    )


def drone_circle() -> Scenario:
    params = DoubleIntegratorParams(a_max=5.0)
    return Scenario(
        name="drone_circle",
        params=params,
        initial_state=DoubleIntegratorState(p=(1.5, 0.0), upsilon=(0.0, 0.0)),
        reference=Circle(center=(0.0, 0.0), radius=1.5, omega=0.4),
        disturbance=Sinusoidal(d_bar=0.1, amp=(0.1, 0.1), freq=(1.0, 1.7), phase=(0.0, 0.5)),
        surface=LinearSurface((1.0, 1.0)),
        gains=SmcGains(K=1.0, eta=0.01, lambda_bl=0.05),
        obstacles=(),
        barriers=BarrierConfig(alpha_c3bf=1.0, rho=1e3, ego_radius=0.2),
        duration=30.0,
    )


_REGISTRY = {
    "f1tenth_circle": f1tenth_circle,
    "turtlebot_lissajous": turtlebot_lissajous,
    "drone_circle": drone_circle,
}


def get_preset(preset_id: str) -> Scenario:
    try:
        return _REGISTRY[preset_id]()
    except KeyError:
        raise KeyError(f"unknown preset {preset_id!r}; choose from {', '.join(PRESET_IDS)}") from None
