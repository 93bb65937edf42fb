"""Minimal hand-rolled log-log SVG charts for convergence reports."""

from __future__ import annotations

import math

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_WIDTH = 560
_HEIGHT = 420
_MARGIN = 64


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def loglog_chart(title: str, xs, series: dict[str, list[float]],
                 slopes: tuple[float, ...] = ()) -> str:
    """Render one log-log chart; ``series`` maps labels to y-values over xs.

    ``slopes`` adds reference triangles anchored at the last data point of
    the first series.
    """
    pts_x = [math.log10(v) for v in xs]
    all_y = [v for ys in series.values() for v in ys if v > 0]
    if not all_y:
        all_y = [1.0]
    pts_y = [math.log10(v) for v in all_y]
    x0, x1 = min(pts_x), max(pts_x)
    y0, y1 = min(pts_y), max(pts_y)
    if x1 - x0 < 1e-12:
        x1 = x0 + 1.0
    pad = 0.05 * max(y1 - y0, 1e-6) + 0.15
    y0 -= pad
    y1 += pad

    def sx(v):
        return _MARGIN + (v - x0) / (x1 - x0) * (_WIDTH - 2 * _MARGIN)

    def sy(v):
        return _HEIGHT - _MARGIN - (v - y0) / (y1 - y0) * (_HEIGHT - 2 * _MARGIN)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}" font-family="monospace" font-size="11">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH // 2}" y="20" text-anchor="middle" font-size="13">{title}</text>',
        f'<line x1="{_MARGIN}" y1="{_HEIGHT - _MARGIN}" x2="{_WIDTH - _MARGIN}" '
        f'y2="{_HEIGHT - _MARGIN}" stroke="black"/>',
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" y2="{_HEIGHT - _MARGIN}" stroke="black"/>',
        f'<text x="{_WIDTH // 2}" y="{_HEIGHT - 16}" text-anchor="middle">log10 h</text>',
        f'<text x="16" y="{_HEIGHT // 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {_HEIGHT // 2})">log10 error</text>',
    ]
    for k in range(int(math.floor(x0)), int(math.ceil(x1)) + 1):
        if x0 <= k <= x1:
            out.append(f'<line x1="{_fmt(sx(k))}" y1="{_MARGIN}" x2="{_fmt(sx(k))}" '
                       f'y2="{_HEIGHT - _MARGIN}" stroke="#dddddd"/>')
            out.append(f'<text x="{_fmt(sx(k))}" y="{_HEIGHT - _MARGIN + 16}" '
                       f'text-anchor="middle">{k}</text>')
    for k in range(int(math.floor(y0)), int(math.ceil(y1)) + 1):
        if y0 <= k <= y1:
            out.append(f'<line x1="{_MARGIN}" y1="{_fmt(sy(k))}" x2="{_WIDTH - _MARGIN}" '
                       f'y2="{_fmt(sy(k))}" stroke="#dddddd"/>')
            out.append(f'<text x="{_MARGIN - 8}" y="{_fmt(sy(k))}" text-anchor="end" '
                       f'dominant-baseline="middle">{k}</text>')

    for idx, (label, ys) in enumerate(series.items()):
        color = _COLORS[idx % len(_COLORS)]
        coords = " ".join(f"{_fmt(sx(math.log10(x)))},{_fmt(sy(math.log10(y)))}"
                          for x, y in zip(xs, ys) if y > 0)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for x, y in zip(xs, ys):
            if y > 0:
                out.append(f'<circle cx="{_fmt(sx(math.log10(x)))}" '
                           f'cy="{_fmt(sy(math.log10(y)))}" r="3" fill="{color}"/>')
        out.append(f'<text x="{_WIDTH - _MARGIN + 4}" y="{_MARGIN + 14 * idx + 10}" '
                   f'fill="{color}">{label}</text>')

    # reference slope triangles anchored near the finest level of the first series
    if slopes and series:
        first = next(iter(series.values()))
        anchor_x = math.log10(xs[-1])
        anchor_y = math.log10(max(first[-1], 1e-300)) - 0.25
        dx = 0.25
        for j, rate in enumerate(slopes):
            ax, ay = anchor_x + j * 0.45, anchor_y
            x_a, y_a = sx(ax), sy(ay)
            x_b, y_b = sx(ax + dx), sy(ay)
            x_c, y_c = sx(ax + dx), sy(ay + rate * dx)
            out.append(f'<polygon points="{_fmt(x_a)},{_fmt(y_a)} {_fmt(x_b)},{_fmt(y_b)} '
                       f'{_fmt(x_c)},{_fmt(y_c)}" fill="none" stroke="#555555"/>')
            out.append(f'<text x="{_fmt(x_b + 3)}" y="{_fmt((y_b + y_c) / 2)}" '
                       f'fill="#555555">{rate:g}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
