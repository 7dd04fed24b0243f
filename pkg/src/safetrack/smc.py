"""Sliding-mode tracking law with boundary-layer saturation."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, InvalidInputError, SingularityError
from .models import AffineDynamics, CanonicalState, VehicleParams, sigma_max_bound, singular_values

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrackingError:
    e1: np.ndarray
    e2: np.ndarray


@dataclass(frozen=True)
class ReferenceSample:
    p_ref: np.ndarray
    pdot_ref: np.ndarray
    pddot_ref: np.ndarray


@dataclass(frozen=True)
class LinearSurface:
    """``S = diag(lambda_gains) e1 + e2``."""

    lambda_gains: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        gains = tuple(float(g) for g in self.lambda_gains)
        if len(gains) != 2 or not all(g > 0 and math.isfinite(g) for g in gains):
            raise InvalidInputError("lambda_gains must be two positive numbers")
        object.__setattr__(self, "lambda_gains", gains)


@dataclass(frozen=True)
class NTSMSurface:
    """Nonsingular terminal surface ``S = e1 + diag(1/beta) |e2|^(p/q) sgn(e2)``.

    ``p_exp`` and ``q_exp`` are odd with ``1 < p_exp/q_exp < 2``.
    """

    beta: tuple[float, float] = (1.0, 1.0)
    p_exp: int = 5
    q_exp: int = 3

    def __post_init__(self):
        beta = tuple(float(b) for b in self.beta)
        if len(beta) != 2 or not all(b > 0 and math.isfinite(b) for b in beta):
            raise InvalidInputError("beta must be two positive numbers")
        object.__setattr__(self, "beta", beta)
        p, q = self.p_exp, self.q_exp
        if int(p) != p or int(q) != q or p % 2 == 0 or q % 2 == 0 or q <= 0:
            raise InvalidInputError("p_exp and q_exp must be odd positive integers")
        if not q < p < 2 * q:
            raise InvalidInputError("need 1 < p_exp/q_exp < 2")

    @property
    def ratio(self) -> float:
        return self.p_exp / self.q_exp


SlidingSurfaceSpec = LinearSurface | NTSMSurface


@dataclass(frozen=True)
class SmcGains:
    K: float = 1.0
    eta: float = 0.01
    lambda_bl: float = 0.05

    def __post_init__(self):
        for name in ("K", "eta", "lambda_bl"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise InvalidInputError(f"{name} must be positive, got {val!r}")


@dataclass(frozen=True)
class GainReport:
    ok: bool
    K: float
    threshold: float
    sigma_max: float
    d_bar: float
    eta: float

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "K": self.K,
            "threshold": self.threshold,
            "sigma_max": self.sigma_max,
            "d_bar": self.d_bar,
            "eta": self.eta,
        }


def _signed_power(x: np.ndarray, expo: float) -> np.ndarray:
    return np.sign(x) * np.abs(x) ** expo


def tracking_error(c: CanonicalState, r: ReferenceSample) -> TrackingError:
    return TrackingError(
        e1=np.asarray(r.p_ref, dtype=float) - c.p,
        e2=np.asarray(r.pdot_ref, dtype=float) - c.upsilon,
    )


def surface_value(spec: SlidingSurfaceSpec, err: TrackingError) -> np.ndarray:
    e1 = np.asarray(err.e1, dtype=float)
    e2 = np.asarray(err.e2, dtype=float)
    if isinstance(spec, LinearSurface):
        return np.asarray(spec.lambda_gains) * e1 + e2
    if isinstance(spec, NTSMSurface):
        return e1 + _signed_power(e2, spec.ratio) / np.asarray(spec.beta)
    raise TypeError(f"unsupported surface {type(spec).__name__}")


def equivalent_correction(spec: SlidingSurfaceSpec, err: TrackingError) -> np.ndarray:
    """Model-inverting term that keeps ``S`` constant in the nominal system.

    For the terminal surface the exponent ``2 - p/q`` is positive, so the term
    is finite and continuous at ``e2 = 0``.
    """
    e2 = np.asarray(err.e2, dtype=float)
    if isinstance(spec, LinearSurface):
        return np.asarray(spec.lambda_gains) * e2
    if isinstance(spec, NTSMSurface):
        scale = spec.q_exp * np.asarray(spec.beta) / spec.p_exp
        return scale * _signed_power(e2, 2.0 - spec.ratio)
    raise TypeError(f"unsupported surface {type(spec).__name__}")


def sat(x) -> np.ndarray:
    return np.clip(x, -1.0, 1.0)


def smc_control(
    dyn: AffineDynamics,
    r: ReferenceSample,
    err: TrackingError,
    spec: SlidingSurfaceSpec,
    gains: SmcGains,
) -> np.ndarray:
    """Practical sliding-mode input

    ``u = h^-1 (pddot_ref - f + correction + K sat(S / lambda_bl))``.
    """
    smin, _ = singular_values(dyn.h_upsilon)
    if smin < 1e-9:
        raise SingularityError(f"input matrix singular (sigma_min={smin:.3e})")
    S = surface_value(spec, err)
    rhs = (
        np.asarray(r.pddot_ref, dtype=float)
        - dyn.f_upsilon
        + equivalent_correction(spec, err)
        + gains.K * sat(S / gains.lambda_bl)
    )
    return np.linalg.solve(dyn.h_upsilon, rhs)


def gain_threshold(sigma_max: float, d_bar: float, eta: float) -> float:
    """Sufficient switching-gain level ``sqrt(2) sigma_max d_bar + eta``."""
    return math.sqrt(2.0) * sigma_max * d_bar + eta


def validate_gain(K: float, params: VehicleParams | float, d_bar: float, eta: float) -> GainReport:
    """Check the reaching condition for switching gain ``K``.

    ``params`` may be vehicle parameters (bound taken from the admissible
    set) or a number used directly as ``sigma_max``.  A failing check is
    logged, never raised; under-gained runs are allowed.
    """
    if d_bar < 0:
        raise DomainError("d_bar must be non-negative")
    if eta <= 0:
        raise DomainError("eta must be positive")
    if isinstance(params, (int, float)):
        sigma = float(params)
    else:
        sigma = sigma_max_bound(params)
    thr = gain_threshold(sigma, d_bar, eta)
    report = GainReport(ok=K > thr, K=float(K), threshold=thr, sigma_max=sigma,
                        d_bar=float(d_bar), eta=float(eta))
    if not report.ok:
        log.warning("switching gain K=%g does not exceed reaching threshold %g", K, thr)
    return report


def reaching_time_bound(S0, eta: float) -> float:
    """Upper bound ``||S(0)|| / eta`` on the time to reach the surface."""
    if not eta > 0:
        raise DomainError("eta must be positive")
    return float(np.linalg.norm(np.asarray(S0, dtype=float))) / eta
