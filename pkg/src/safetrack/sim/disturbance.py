"""Bounded matched disturbances."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..exceptions import InvalidInputError


@dataclass(frozen=True)
class NoDisturbance:
    """Nothing injected; ``d_bar`` is still the design bound used by the controller."""

    d_bar: float = 0.0

    def __post_init__(self):
        if self.d_bar < 0:
            raise InvalidInputError("d_bar must be non-negative")


@dataclass(frozen=True)
class Sinusoidal:
    """``amp_i * sin(freq_i * t + phase_i)``; ``freq`` is angular (rad/s)."""

    d_bar: float
    amp: tuple[float, float]
    freq: tuple[float, float]
    phase: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.d_bar < 0:
            raise InvalidInputError("d_bar must be non-negative")
        if max(abs(a) for a in self.amp) > self.d_bar:
            raise InvalidInputError("sinusoid amplitude exceeds d_bar")


@dataclass(frozen=True)
class UniformRandom:
    """Uniform on ``[-d_bar, d_bar]^2``, redrawn once per control period.

    ``seed=None`` falls back to the scenario seed.
    """

    d_bar: float
    seed: int | None = None

    def __post_init__(self):
        if self.d_bar < 0:
            raise InvalidInputError("d_bar must be non-negative")


DisturbanceSpec = NoDisturbance | Sinusoidal | UniformRandom


class DisturbanceProcess:
    """Deterministic realization of a disturbance spec.

    Random samples are drawn in control-period order from a seeded generator,
    so two processes built with the same seed produce identical sequences.
    """

    def __init__(self, spec: DisturbanceSpec, seed: int = 0):
        self.spec = spec
        self._held: list[np.ndarray] = []
        if isinstance(spec, UniformRandom):
            self._rng = np.random.default_rng(spec.seed if spec.seed is not None else seed)

    def _piece(self, k: int) -> np.ndarray:
        while len(self._held) <= k:
            self._held.append(self._rng.uniform(-self.spec.d_bar, self.spec.d_bar, size=2))
        return self._held[k]

    def at(self, t: float, k: int) -> np.ndarray:
        """Disturbance at time ``t`` inside control period ``k``."""
        spec = self.spec
        if isinstance(spec, NoDisturbance):
            d = np.zeros(2)
        elif isinstance(spec, Sinusoidal):
            d = np.array([
                spec.amp[0] * math.sin(spec.freq[0] * t + spec.phase[0]),
                spec.amp[1] * math.sin(spec.freq[1] * t + spec.phase[1]),
            ])
        elif isinstance(spec, UniformRandom):
            d = self._piece(k)
        else:
            raise TypeError(f"unsupported disturbance {type(spec).__name__}")
        if max(abs(d[0]), abs(d[1])) > spec.d_bar:
            raise AssertionError(f"disturbance {d} exceeds bound {spec.d_bar}")
        return d


def disturbance(spec: DisturbanceSpec, t: float, process: DisturbanceProcess | None = None,
                period_index: int = 0) -> np.ndarray:
    """Sample ``spec`` at ``t``; ``process`` carries the random state across calls."""
    if process is None:
        process = DisturbanceProcess(spec)
    return process.at(t, period_index)
