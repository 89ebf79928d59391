"""Plain SVG output: environment maps, trajectory overlays and summary charts.

Coordinates are written with fixed precision so the output is byte-stable.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .envgen import Cell, Environment

PX_PER_M = 40.0
MARGIN = 10.0
PATH_COLOUR = "#1a9e1a"


def _f(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _header(width: float, height: float) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" height="{_f(height)}" '
        f'viewBox="0 0 {_f(width)} {_f(height)}">',
        f'<rect x="0" y="0" width="{_f(width)}" height="{_f(height)}" fill="#ffffff"/>',
    ]


def render_environment(env: Environment, trace=None, goal_radius: float | None = None) -> str:
    """Walls as grey cells, start in blue, target in red, optional path in green.

    ``trace`` is a sequence of rows whose second and third entries are x and y
    in metres (the trace CSV layout).
    """
    grid = env.grid
    cs = grid.cell_size
    w_m, h_m = grid.width * cs, grid.height * cs
    width = w_m * PX_PER_M + 2 * MARGIN
    height = h_m * PX_PER_M + 2 * MARGIN

    def px(x, y):
        # SVG y grows downwards
        return MARGIN + x * PX_PER_M, MARGIN + (h_m - y) * PX_PER_M

    out = _header(width, height)
    out.append('<g fill="#555555" stroke="none">')
    side = cs * PX_PER_M
    for row in range(grid.height):
        for col in range(grid.width):
            if grid.cells[row, col] == Cell.WALL:
                x0, y0 = px(col * cs, (row + 1) * cs)
                out.append(f'<rect x="{_f(x0)}" y="{_f(y0)}" width="{_f(side)}" height="{_f(side)}"/>')
    out.append("</g>")
    if trace is not None and len(trace) > 1:
        pts = " ".join("{},{}".format(*map(_f, px(r[1], r[2]))) for r in trace)
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="{PATH_COLOUR}" stroke-width="2" '
            'stroke-linejoin="round"/>'
        )
    sx, sy = px(env.start_pose.position.x, env.start_pose.position.y)
    tx, ty = px(env.target.x, env.target.y)
    if goal_radius is not None:
        out.append(
            f'<circle cx="{_f(tx)}" cy="{_f(ty)}" r="{_f(goal_radius * PX_PER_M)}" fill="none" '
            'stroke="#d62728" stroke-dasharray="4 3"/>'
        )
    out.append(f'<circle cx="{_f(sx)}" cy="{_f(sy)}" r="6.00" fill="#1f77b4"/>')
    out.append(f'<circle cx="{_f(tx)}" cy="{_f(ty)}" r="6.00" fill="#d62728"/>')
    out.append(f'<text x="{_f(sx + 8)}" y="{_f(sy - 8)}" font-size="12" font-family="sans-serif">S</text>')
    out.append(f'<text x="{_f(tx + 8)}" y="{_f(ty - 8)}" font-size="12" font-family="sans-serif">T</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


_CHART_W, _CHART_H = 520.0, 320.0
_PAD_L, _PAD_R, _PAD_T, _PAD_B = 50.0, 20.0, 30.0, 40.0


def _chart_frame(title: str, y_max: float, n_ticks: int = 5) -> tuple[list[str], callable]:
    out = _header(_CHART_W, _CHART_H)
    plot_h = _CHART_H - _PAD_T - _PAD_B
    y_max = y_max if y_max > 0 else 1.0

    def ypx(v):
        return _PAD_T + plot_h * (1.0 - v / y_max)

    out.append(
        f'<text x="{_f(_CHART_W / 2)}" y="18" font-size="14" font-family="sans-serif" '
        f'text-anchor="middle">{escape(title)}</text>'
    )
    for k in range(n_ticks + 1):
        v = y_max * k / n_ticks
        y = ypx(v)
        out.append(
            f'<line x1="{_f(_PAD_L)}" y1="{_f(y)}" x2="{_f(_CHART_W - _PAD_R)}" y2="{_f(y)}" '
            'stroke="#dddddd"/>'
        )
        out.append(
            f'<text x="{_f(_PAD_L - 6)}" y="{_f(y + 4)}" font-size="10" font-family="sans-serif" '
            f'text-anchor="end">{v:.3g}</text>'
        )
    return out, ypx


def _slots(n: int):
    plot_w = _CHART_W - _PAD_L - _PAD_R
    step = plot_w / max(n, 1)
    return [(_PAD_L + step * (i + 0.5), step) for i in range(n)]


def _label(out, cx, text):
    out.append(
        f'<text x="{_f(cx)}" y="{_f(_CHART_H - _PAD_B + 16)}" font-size="11" font-family="sans-serif" '
        f'text-anchor="middle">{escape(text)}</text>'
    )


def bar_chart(labels, values, title: str, y_max: float | None = None) -> str:
    values = [float(v) for v in values]
    top = y_max if y_max is not None else max(values + [0.0]) * 1.1
    out, ypx = _chart_frame(title, top)
    for (cx, step), lab, v in zip(_slots(len(labels)), labels, values):
        bw = 0.6 * step
        y0, y1 = ypx(v), ypx(0.0)
        out.append(
            f'<rect x="{_f(cx - bw / 2)}" y="{_f(y0)}" width="{_f(bw)}" height="{_f(y1 - y0)}" '
            'fill="#4c72b0"/>'
        )
        _label(out, cx, lab)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def box_chart(labels, samples, title: str) -> str:
    """Quartile boxes with whiskers at the 5th and 95th percentiles."""
    stats = []
    for s in samples:
        a = np.asarray(s, dtype=float)
        a = a[np.isfinite(a)]
        stats.append(None if a.size == 0 else np.percentile(a, [5, 25, 50, 75, 95]))
    top = max([q[4] for q in stats if q is not None] + [1.0]) * 1.1
    out, ypx = _chart_frame(title, top)
    for (cx, step), lab, q in zip(_slots(len(labels)), labels, stats):
        _label(out, cx, lab)
        if q is None:
            continue
        bw = 0.5 * step
        out.append(
            f'<line x1="{_f(cx)}" y1="{_f(ypx(q[0]))}" x2="{_f(cx)}" y2="{_f(ypx(q[4]))}" stroke="#333333"/>'
        )
        out.append(
            f'<rect x="{_f(cx - bw / 2)}" y="{_f(ypx(q[3]))}" width="{_f(bw)}" '
            f'height="{_f(ypx(q[1]) - ypx(q[3]))}" fill="#dd8452" stroke="#333333"/>'
        )
        out.append(
            f'<line x1="{_f(cx - bw / 2)}" y1="{_f(ypx(q[2]))}" x2="{_f(cx + bw / 2)}" '
            f'y2="{_f(ypx(q[2]))}" stroke="#000000" stroke-width="2"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
