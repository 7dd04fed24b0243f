"""JSON scenario files: schema validation, loading and saving.

A scenario file is one JSON object with the sections ``vehicle``,
``reference``, ``obstacles``, ``disturbance``, ``controller``, ``barriers`` and
``sim``.  Unknown keys are rejected.  Loading and saving round-trips exactly.
"""
from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from ..cbf import Circular, ConstantVelocity, Obstacle, SoftBarrierSpec
from ..exceptions import SafetrackError, ScenarioError
from ..models import (
    AckermannParams,
    AckermannState,
    DiffDriveParams,
    DiffDriveState,
    DoubleIntegratorParams,
    DoubleIntegratorState,
)
from ..sim.disturbance import NoDisturbance, Sinusoidal, UniformRandom
from ..sim.reference import Circle, Lissajous, WaypointSpline
from ..sim.scenario import BarrierConfig, Scenario
from ..smc import LinearSurface, NTSMSurface, SmcGains

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_VEC2 = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


def _tagged(tag, props, required=()):
    return _obj({"type": {"const": tag}, **props}, ("type", *required))


_VEHICLE = {"oneOf": [
    _tagged("ackermann", {
        "l_f": _POS, "l_r": _POS, "v_min": _POS, "v_max": _POS, "delta3_max": _POS,
        "a_max": _POS, "steer_rate_max": _POS,
        "initial_state": _obj({"p": _VEC2, "v": _NUM, "delta1": _NUM, "delta3": _NUM},
                              ("p", "v", "delta1", "delta3")),
    }, ("l_f", "l_r", "v_min", "v_max", "delta3_max", "initial_state")),
    _tagged("diff_drive", {
        "v_min": _POS, "v_max": _POS, "omega_max": _POS, "a_max": _POS,
        "initial_state": _obj({"p": _VEC2, "v": _NUM, "theta": _NUM}, ("p", "v", "theta")),
    }, ("v_min", "v_max", "omega_max", "initial_state")),
    _tagged("double_integrator", {
        "a_max": _POS,
        "initial_state": _obj({"p": _VEC2, "upsilon": _VEC2}, ("p", "upsilon")),
    }, ("a_max", "initial_state")),
]}

_REFERENCE = {"oneOf": [
    _tagged("circle", {"center": _VEC2, "radius": _POS, "omega": _NUM, "phase": _NUM},
            ("center", "radius", "omega")),
    _tagged("lissajous", {"center": _VEC2, "amp": _VEC2, "omega": _VEC2, "phase": _VEC2},
            ("center", "amp", "omega")),
    _tagged("waypoint_spline", {
        "times": {"type": "array", "items": _NUM, "minItems": 2},
        "points": {"type": "array", "items": _VEC2, "minItems": 2},
    }, ("times", "points")),
]}

_MOTION = {"oneOf": [
    _tagged("constant_velocity", {"p0": _VEC2, "v_obs": _VEC2}, ("p0", "v_obs")),
    _tagged("circular", {"p_c": _VEC2, "R_c": _POS, "omega_obs": _NUM, "theta0": _NUM,
                         "v_obs": _NONNEG}, ("p_c", "R_c", "omega_obs")),
]}

_DISTURBANCE = {"oneOf": [
    _tagged("none", {"d_bar": _NONNEG}),
    _tagged("sinusoidal", {"d_bar": _NONNEG, "amp": _VEC2, "freq": _VEC2, "phase": _VEC2},
            ("d_bar", "amp", "freq")),
    _tagged("uniform_random", {"d_bar": _NONNEG, "seed": {"type": ["integer", "null"]}},
            ("d_bar",)),
]}

_SURFACE = {"oneOf": [
    _tagged("linear", {"lambda_gains": _VEC2}),
    _tagged("ntsm", {"beta": _VEC2, "p_exp": {"type": "integer"}, "q_exp": {"type": "integer"}}),
]}

SCHEMA = _obj({
    "name": {"type": "string"},
    "vehicle": _VEHICLE,
    "reference": _REFERENCE,
    "obstacles": {"type": "array", "items": _obj({"radius_obs": _POS, "motion": _MOTION},
                                                 ("radius_obs", "motion"))},
    "disturbance": _DISTURBANCE,
    "controller": _obj({
        "surface": _SURFACE,
        "gains": _obj({"K": _POS, "eta": _POS, "lambda_bl": _POS}),
    }, ("surface",)),
    "barriers": _obj({
        "alpha_c3bf": _POS, "rho": _POS, "ego_radius": _NONNEG,
        "soft": {"type": ["array", "null"], "items": _obj({
            "kind": {"enum": ["v_min", "v_max", "delta3"]},
            "alpha_gain": _POS,
            "margin_delta": {"type": ["number", "null"], "minimum": 0},
        }, ("kind",))},
    }),
    "sim": _obj({"duration": _NONNEG, "dt_physics": _POS, "control_period": _POS,
                 "seed": {"type": "integer"}}, ("duration",)),
}, ("vehicle", "reference", "disturbance", "controller", "sim"))


class ScenarioFileError(SafetrackError):
    """The file is unreadable, not JSON, or not a valid scenario."""


def _path_str(path) -> str:
    out = "$"
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else f".{part}"
    return out


def _leaves(err):
    """Expand ``oneOf`` failures into the errors of the branch whose tag matched."""
    if not err.context:
        return [err]
    branches: dict[int, list] = {}
    for sub in err.context:
        branches.setdefault(sub.relative_schema_path[0], []).append(sub)
    tag_ok = [errs for errs in branches.values()
              if not any(e.validator == "const" and list(e.relative_path) == ["type"]
                         for e in errs)]
    if len(tag_ok) != 1:
        return [err]
    return [leaf for sub in tag_ok[0] for leaf in _leaves(sub)]


def validate_dict(data) -> None:
    """Raise :class:`ScenarioFileError` with a field path on schema violations."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        msgs = [f"{_path_str(leaf.absolute_path)}: {leaf.message}"
                for err in errors for leaf in _leaves(err)]
        raise ScenarioFileError("invalid scenario:\n  " + "\n  ".join(msgs))


def _t2(x):
    return tuple(float(v) for v in x)


def _vehicle(d):
    st = d["initial_state"]
    kind = d["type"]
    if kind == "ackermann":
        keys = ("l_f", "l_r", "v_min", "v_max", "delta3_max", "a_max", "steer_rate_max")
        params = AckermannParams(**{k: d[k] for k in keys if k in d})
        state = AckermannState(p=st["p"], v=st["v"], delta1=st["delta1"], delta3=st["delta3"])
    elif kind == "diff_drive":
        keys = ("v_min", "v_max", "omega_max", "a_max")
        params = DiffDriveParams(**{k: d[k] for k in keys if k in d})
        state = DiffDriveState(p=st["p"], v=st["v"], theta=st["theta"])
    else:
        params = DoubleIntegratorParams(a_max=d["a_max"])
        state = DoubleIntegratorState(p=st["p"], upsilon=st["upsilon"])
    return params, state


def _reference(d):
    kind = d["type"]
    if kind == "circle":
        return Circle(center=_t2(d["center"]), radius=d["radius"], omega=d["omega"],
                      phase=d.get("phase", 0.0))
    if kind == "lissajous":
        return Lissajous(center=_t2(d["center"]), amp=_t2(d["amp"]), omega=_t2(d["omega"]),
                         phase=_t2(d.get("phase", (0.0, 0.0))))
    return WaypointSpline(times=_t2(d["times"]), points=tuple(_t2(p) for p in d["points"]))


def _obstacle(d):
    m = d["motion"]
    if m["type"] == "constant_velocity":
        motion = ConstantVelocity(p0=m["p0"], v_obs=m["v_obs"])
    else:
        motion = Circular(p_c=m["p_c"], R_c=m["R_c"], omega_obs=m["omega_obs"],
                          theta0=m.get("theta0", 0.0), v_obs=m.get("v_obs"))
    return Obstacle(radius_obs=d["radius_obs"], motion=motion)


def _disturbance(d):
    kind = d["type"]
    if kind == "none":
        return NoDisturbance(d_bar=d.get("d_bar", 0.0))
    if kind == "sinusoidal":
        return Sinusoidal(d_bar=d["d_bar"], amp=_t2(d["amp"]), freq=_t2(d["freq"]),
                          phase=_t2(d.get("phase", (0.0, 0.0))))
    return UniformRandom(d_bar=d["d_bar"], seed=d.get("seed"))


def _surface(d):
    if d["type"] == "linear":
        return LinearSurface(_t2(d.get("lambda_gains", (1.0, 1.0))))
    return NTSMSurface(beta=_t2(d.get("beta", (1.0, 1.0))), p_exp=d.get("p_exp", 5),
                       q_exp=d.get("q_exp", 3))


def _barriers(d):
    soft = d.get("soft")
    if soft is not None:
        soft = tuple(SoftBarrierSpec(kind=s["kind"], alpha_gain=s.get("alpha_gain", 1.0),
                                     margin_delta=s.get("margin_delta")) for s in soft)
    return BarrierConfig(alpha_c3bf=d.get("alpha_c3bf", 1.0), soft=soft,
                         rho=d.get("rho", 1e3), ego_radius=d.get("ego_radius", 0.2))


def scenario_from_dict(data) -> Scenario:
    """Build a :class:`Scenario` from a decoded scenario document."""
    validate_dict(data)
    try:
        params, state = _vehicle(data["vehicle"])
        sim = data["sim"]
        return Scenario(
            name=data.get("name", "scenario"),
            params=params,
            initial_state=state,
            reference=_reference(data["reference"]),
            disturbance=_disturbance(data["disturbance"]),
            surface=_surface(data["controller"]["surface"]),
            gains=SmcGains(**data["controller"].get("gains", {})),
            obstacles=tuple(_obstacle(o) for o in data.get("obstacles", [])),
            barriers=_barriers(data.get("barriers", {})),
            duration=sim["duration"],
            dt_physics=sim.get("dt_physics", 1e-3),
            control_period=sim.get("control_period", 1e-2),
            seed=sim.get("seed", 0),
        )
    except (ValueError, TypeError) as exc:
        raise ScenarioFileError(f"invalid scenario: {exc}") from exc


def _l(x):
    return [float(v) for v in x]


def scenario_to_dict(s: Scenario) -> dict:
    p, st = s.params, s.initial_state
    if isinstance(p, AckermannParams):
        vehicle = {"type": "ackermann", "l_f": p.l_f, "l_r": p.l_r, "v_min": p.v_min,
                   "v_max": p.v_max, "delta3_max": p.delta3_max, "a_max": p.a_max,
                   "steer_rate_max": p.steer_rate_max,
                   "initial_state": {"p": _l(st.p), "v": st.v, "delta1": st.delta1,
                                     "delta3": st.delta3}}
    elif isinstance(p, DiffDriveParams):
        vehicle = {"type": "diff_drive", "v_min": p.v_min, "v_max": p.v_max,
                   "omega_max": p.omega_max, "a_max": p.a_max,
                   "initial_state": {"p": _l(st.p), "v": st.v, "theta": st.theta}}
    else:
        vehicle = {"type": "double_integrator", "a_max": p.a_max,
                   "initial_state": {"p": _l(st.p), "upsilon": _l(st.upsilon)}}

    r = s.reference
    if isinstance(r, Circle):
        ref = {"type": "circle", "center": _l(r.center), "radius": r.radius,
               "omega": r.omega, "phase": r.phase}
    elif isinstance(r, Lissajous):
        ref = {"type": "lissajous", "center": _l(r.center), "amp": _l(r.amp),
               "omega": _l(r.omega), "phase": _l(r.phase)}
    else:
        ref = {"type": "waypoint_spline", "times": _l(r.times),
               "points": [_l(q) for q in r.points]}

    obstacles = []
    for o in s.obstacles:
        m = o.motion
        if isinstance(m, ConstantVelocity):
            motion = {"type": "constant_velocity", "p0": _l(m.p0), "v_obs": _l(m.v_obs)}
        else:
            motion = {"type": "circular", "p_c": _l(m.p_c), "R_c": m.R_c,
                      "omega_obs": m.omega_obs, "theta0": m.theta0}
            if m.v_obs is not None:
                motion["v_obs"] = m.v_obs
        obstacles.append({"radius_obs": o.radius_obs, "motion": motion})

    d = s.disturbance
    if isinstance(d, NoDisturbance):
        dist = {"type": "none", "d_bar": d.d_bar}
    elif isinstance(d, Sinusoidal):
        dist = {"type": "sinusoidal", "d_bar": d.d_bar, "amp": _l(d.amp), "freq": _l(d.freq),
                "phase": _l(d.phase)}
    else:
        dist = {"type": "uniform_random", "d_bar": d.d_bar, "seed": d.seed}

    sf = s.surface
    if isinstance(sf, LinearSurface):
        surface = {"type": "linear", "lambda_gains": _l(sf.lambda_gains)}
    else:
        surface = {"type": "ntsm", "beta": _l(sf.beta), "p_exp": sf.p_exp, "q_exp": sf.q_exp}

    b = s.barriers
    soft = None if b.soft is None else [
        {"kind": x.kind, "alpha_gain": x.alpha_gain, "margin_delta": x.margin_delta}
        for x in b.soft]
    return {
        "name": s.name,
        "vehicle": vehicle,
        "reference": ref,
        "obstacles": obstacles,
        "disturbance": dist,
        "controller": {"surface": surface,
                       "gains": {"K": s.gains.K, "eta": s.gains.eta,
                                 "lambda_bl": s.gains.lambda_bl}},
        "barriers": {"alpha_c3bf": b.alpha_c3bf, "rho": b.rho, "ego_radius": b.ego_radius,
                     "soft": soft},
        "sim": {"duration": s.duration, "dt_physics": s.dt_physics,
                "control_period": s.control_period, "seed": s.seed},
    }


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file.

    Raises:
        ScenarioFileError: unreadable file, malformed JSON (with line and
            column) or schema violations (with the offending field path).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioFileError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFileError(
            f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return scenario_from_dict(data)


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=2) + "\n", encoding="utf-8")


__all__ = ["SCHEMA", "ScenarioFileError", "ScenarioError", "load_scenario", "save_scenario",
           "scenario_from_dict", "scenario_to_dict", "validate_dict"]
