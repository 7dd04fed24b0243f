"""Twice-differentiable reference trajectories with analytic derivatives."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from ..exceptions import InvalidInputError
from ..smc import ReferenceSample


@dataclass(frozen=True)
class Circle:
    """``center + radius * (cos(omega t + phase), sin(omega t + phase))``."""

    center: tuple[float, float]
    radius: float
    omega: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidInputError("circle radius must be positive")


@dataclass(frozen=True)
class Lissajous:
    """``center_i + amp_i * sin(omega_i t + phase_i)`` per axis."""

    center: tuple[float, float]
    amp: tuple[float, float]
    omega: tuple[float, float]
    phase: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class WaypointSpline:
    """Clamped cubic spline through ``points`` at increasing ``times``.

    End velocities are zero; the last point is held after ``times[-1]``.
    """

    times: tuple[float, ...]
    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        pts = np.asarray(self.points, dtype=float)
        if t.ndim != 1 or t.size < 2 or pts.shape != (t.size, 2):
            raise InvalidInputError("need at least two waypoints with matching times")
        if np.any(np.diff(t) <= 0):
            raise InvalidInputError("waypoint times must be strictly increasing")

    @cached_property
    def _spline(self) -> CubicSpline:
        return CubicSpline(np.asarray(self.times), np.asarray(self.points), bc_type="clamped")


ReferenceSpec = Circle | Lissajous | WaypointSpline


def reference(spec: ReferenceSpec, t: float) -> ReferenceSample:
    if isinstance(spec, Circle):
        ang = spec.omega * t + spec.phase
        c, s = math.cos(ang), math.sin(ang)
        R, w = spec.radius, spec.omega
        return ReferenceSample(
            np.array([spec.center[0] + R * c, spec.center[1] + R * s]),
            np.array([-R * w * s, R * w * c]),
            np.array([-R * w * w * c, -R * w * w * s]),
        )
    if isinstance(spec, Lissajous):
        amp = np.asarray(spec.amp, dtype=float)
        w = np.asarray(spec.omega, dtype=float)
        ang = w * t + np.asarray(spec.phase, dtype=float)
        return ReferenceSample(
            np.asarray(spec.center, dtype=float) + amp * np.sin(ang),
            amp * w * np.cos(ang),
            -amp * w * w * np.sin(ang),
        )
    if isinstance(spec, WaypointSpline):
        t_end = spec.times[-1]
        if t >= t_end:
            return ReferenceSample(np.asarray(spec.points[-1], dtype=float), np.zeros(2), np.zeros(2))
        tc = max(t, spec.times[0])
        sp = spec._spline
        return ReferenceSample(sp(tc), sp(tc, 1), sp(tc, 2))
    raise TypeError(f"unsupported reference {type(spec).__name__}")
