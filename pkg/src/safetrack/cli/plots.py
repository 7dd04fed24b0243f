"""Dependency-free SVG figures for a finished run.

``trajectory_svg`` draws the reference, the executed path (stroke color
graduated in time) and the obstacles at a few timestamps, each timestamp
marked with the same color on the robot, the reference and every obstacle.
``timeseries_svg`` plots ``||S||`` against the boundary-layer width and
``||e1||`` over time.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from ..cbf import obstacle_state
from ..sim.reference import reference
from ..sim.runner import Trace
from ..sim.scenario import Scenario

# anchor colors of a perceptually ordered ramp (dark purple -> yellow)
_RAMP = np.array([
    [68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37],
], dtype=float)

N_MARKERS = 6
MAX_SEGMENTS = 400


def ramp_color(s: float) -> str:
    s = min(max(s, 0.0), 1.0) * (len(_RAMP) - 1)
    i = min(int(s), len(_RAMP) - 2)
    c = _RAMP[i] + (s - i) * (_RAMP[i + 1] - _RAMP[i])
    return "#{:02x}{:02x}{:02x}".format(*(int(round(x)) for x in c))


def _f(x: float) -> str:
    return f"{x:.2f}"


class _Frame:
    """Affine map from data coordinates to an SVG box (y up)."""

    def __init__(self, xlim, ylim, box, equal=False):
        self.x0, self.y0, self.w, self.h = box
        (xa, xb), (ya, yb) = xlim, ylim
        if xb - xa <= 0:
            xa, xb = xa - 1, xb + 1
        if yb - ya <= 0:
            ya, yb = ya - 1, yb + 1
        sx, sy = self.w / (xb - xa), self.h / (yb - ya)
        if equal:
            s = min(sx, sy)
            cx, cy = (xa + xb) / 2, (ya + yb) / 2
            xa, xb = cx - self.w / (2 * s), cx + self.w / (2 * s)
            ya, yb = cy - self.h / (2 * s), cy + self.h / (2 * s)
            sx = sy = s
        self.xlim, self.ylim = (xa, xb), (ya, yb)
        self.sx, self.sy = sx, sy

    def x(self, v):
        return self.x0 + (v - self.xlim[0]) * self.sx

    def y(self, v):
        return self.y0 + self.h - (v - self.ylim[0]) * self.sy

    def points(self, xs, ys):
        return " ".join(f"{_f(self.x(a))},{_f(self.y(b))}" for a, b in zip(xs, ys))


def _nice_ticks(lo, hi, n=5):
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-12 * span:
        ticks.append(round(v, 12))
        v += step
    return ticks


def _axes(fr: _Frame, xlabel: str, ylabel: str) -> list[str]:
    out = [f'<rect x="{_f(fr.x0)}" y="{_f(fr.y0)}" width="{_f(fr.w)}" height="{_f(fr.h)}" '
           'fill="none" stroke="#444" stroke-width="1"/>']
    for t in _nice_ticks(*fr.xlim):
        x = fr.x(t)
        out.append(f'<line x1="{_f(x)}" y1="{_f(fr.y0 + fr.h)}" x2="{_f(x)}" '
                   f'y2="{_f(fr.y0 + fr.h + 4)}" stroke="#444"/>')
        out.append(f'<text x="{_f(x)}" y="{_f(fr.y0 + fr.h + 16)}" font-size="10" '
                   f'text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(*fr.ylim):
        y = fr.y(t)
        out.append(f'<line x1="{_f(fr.x0 - 4)}" y1="{_f(y)}" x2="{_f(fr.x0)}" y2="{_f(y)}" '
                   'stroke="#444"/>')
        out.append(f'<text x="{_f(fr.x0 - 6)}" y="{_f(y + 3)}" font-size="10" '
                   f'text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{_f(fr.x0 + fr.w / 2)}" y="{_f(fr.y0 + fr.h + 32)}" font-size="12" '
               f'text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="{_f(fr.x0 - 40)}" y="{_f(fr.y0 + fr.h / 2)}" font-size="12" '
               f'text-anchor="middle" transform="rotate(-90 {_f(fr.x0 - 40)} '
               f'{_f(fr.y0 + fr.h / 2)})">{ylabel}</text>')
    return out


def _svg(width, height, body, title) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif">\n'
            f'<title>{title}</title>\n<rect width="100%" height="100%" fill="white"/>\n')
    return head + "\n".join(body) + "\n</svg>\n"


def trajectory_svg(scenario: Scenario, trace: Trace) -> str:
    rows = trace.rows
    if not rows:
        return _svg(200, 60, ['<text x="10" y="30" font-size="12">empty run</text>'],
                    "trajectory")
    ts = np.array([r.t for r in rows])
    px = np.array([r.p[0] for r in rows])
    py = np.array([r.p[1] for r in rows])
    t_dense = np.linspace(ts[0], ts[-1], 600)
    ref = np.array([reference(scenario.reference, t).p_ref for t in t_dense])
    obs_paths = [np.array([obstacle_state(o, t).p_obs for t in t_dense])
                 for o in scenario.obstacles]
    pad = max((o.radius_obs for o in scenario.obstacles), default=0.0) + 0.2
    allx = np.concatenate([px, ref[:, 0], *[q[:, 0] for q in obs_paths]])
    ally = np.concatenate([py, ref[:, 1], *[q[:, 1] for q in obs_paths]])
    fr = _Frame((allx.min() - pad, allx.max() + pad), (ally.min() - pad, ally.max() + pad),
                (60, 20, 520, 520), equal=True)
    span = max(ts[-1] - ts[0], 1e-12)
    body = _axes(fr, "x [m]", "y [m]")

    body.append(f'<polyline points="{fr.points(ref[:, 0], ref[:, 1])}" fill="none" '
                'stroke="#1f77b4" stroke-width="1.5" stroke-dasharray="6 3"/>')
    for q in obs_paths:
        body.append(f'<polyline points="{fr.points(q[:, 0], q[:, 1])}" fill="none" '
                    'stroke="#999" stroke-width="1" stroke-dasharray="2 3"/>')

    # executed path, color graduated in time
    idx = np.unique(np.linspace(0, len(rows) - 1, min(len(rows), MAX_SEGMENTS + 1)).astype(int))
    for a, b in zip(idx[:-1], idx[1:]):
        col = ramp_color((ts[a] - ts[0]) / span)
        body.append(f'<line x1="{_f(fr.x(px[a]))}" y1="{_f(fr.y(py[a]))}" '
                    f'x2="{_f(fr.x(px[b]))}" y2="{_f(fr.y(py[b]))}" stroke="{col}" '
                    'stroke-width="2.5" stroke-linecap="round"/>')

    # timestamp markers: same color on robot, reference and obstacles
    for tm in np.linspace(ts[0], ts[-1], N_MARKERS):
        col = ramp_color((tm - ts[0]) / span)
        k = int(np.argmin(np.abs(ts - tm)))
        rp = reference(scenario.reference, ts[k]).p_ref
        for o in scenario.obstacles:
            po = obstacle_state(o, ts[k]).p_obs
            body.append(f'<circle cx="{_f(fr.x(po[0]))}" cy="{_f(fr.y(po[1]))}" '
                        f'r="{_f(o.radius_obs * fr.sx)}" fill="{col}" fill-opacity="0.35" '
                        f'stroke="{col}" stroke-width="1.5"/>')
        body.append(f'<rect x="{_f(fr.x(rp[0]) - 4)}" y="{_f(fr.y(rp[1]) - 4)}" width="8" '
                    f'height="8" fill="{col}" stroke="black" stroke-width="0.5"/>')
        body.append(f'<circle cx="{_f(fr.x(px[k]))}" cy="{_f(fr.y(py[k]))}" r="5" '
                    f'fill="{col}" stroke="black" stroke-width="0.8"/>')

    # legend and time color bar
    lx = 600
    body.append(f'<line x1="{lx}" y1="40" x2="{lx + 24}" y2="40" stroke="#1f77b4" '
                'stroke-width="1.5" stroke-dasharray="6 3"/>')
    body.append(f'<text x="{lx + 30}" y="44" font-size="11">reference (square)</text>')
    body.append(f'<line x1="{lx}" y1="60" x2="{lx + 24}" y2="60" stroke="{ramp_color(0.5)}" '
                'stroke-width="2.5"/>')
    body.append(f'<text x="{lx + 30}" y="64" font-size="11">robot (dot)</text>')
    if scenario.obstacles:
        body.append(f'<circle cx="{lx + 12}" cy="80" r="6" fill="#999" fill-opacity="0.35" '
                    'stroke="#999"/>')
        body.append(f'<text x="{lx + 30}" y="84" font-size="11">obstacle</text>')
    for i in range(50):
        body.append(f'<rect x="{lx}" y="{_f(110 + i * 6)}" width="16" height="6.5" '
                    f'fill="{ramp_color(i / 49)}" stroke="none"/>')
    body.append(f'<text x="{lx + 22}" y="118" font-size="10">t = {ts[0]:g} s</text>')
    body.append(f'<text x="{lx + 22}" y="410" font-size="10">t = {ts[-1]:g} s</text>')
    return _svg(760, 580, body, f"{scenario.name} trajectory")


def timeseries_svg(scenario: Scenario, trace: Trace) -> str:
    rows = trace.rows
    if not rows:
        return _svg(200, 60, ['<text x="10" y="30" font-size="12">empty run</text>'],
                    "time series")
    t = np.array([r.t for r in rows])
    s_norm = np.array([float(np.linalg.norm(r.S)) for r in rows])
    e_norm = np.array([float(np.linalg.norm(r.e1)) for r in rows])
    lam = scenario.gains.lambda_bl
    tlim = (t[0], max(t[-1], t[0] + 1e-9))
    body = []
    top = _Frame(tlim, (0.0, max(s_norm.max(), lam) * 1.05), (70, 20, 600, 200))
    body += _axes(top, "t [s]", "||S||")
    body.append(f'<polyline points="{top.points(t, s_norm)}" fill="none" stroke="#d62728" '
                'stroke-width="1.2"/>')
    y = top.y(lam)
    body.append(f'<line x1="{_f(top.x0)}" y1="{_f(y)}" x2="{_f(top.x0 + top.w)}" y2="{_f(y)}" '
                'stroke="#555" stroke-dasharray="4 3"/>')
    body.append(f'<text x="{_f(top.x0 + top.w - 4)}" y="{_f(y - 4)}" font-size="10" '
                f'text-anchor="end">boundary layer {lam:g}</text>')
    bot = _Frame(tlim, (0.0, max(e_norm.max(), 1e-9) * 1.05), (70, 280, 600, 200))
    body += _axes(bot, "t [s]", "||e1|| [m]")
    body.append(f'<polyline points="{bot.points(t, e_norm)}" fill="none" stroke="#1f77b4" '
                'stroke-width="1.2"/>')
    return _svg(700, 530, body, f"{scenario.name} time series")


def write_plots(scenario: Scenario, trace: Trace, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    paths = [out_dir / "trajectory.svg", out_dir / "timeseries.svg"]
    paths[0].write_text(trajectory_svg(scenario, trace), encoding="utf-8")
    paths[1].write_text(timeseries_svg(scenario, trace), encoding="utf-8")
    return paths
