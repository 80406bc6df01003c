"""Minimal static SVG line plots."""

from __future__ import annotations

import math
from html import escape

WIDTH, HEIGHT = 640, 440
MARGIN = dict(left=70, right=110, top=40, bottom=55)
COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * step:
        out.append(round(v, 12))
        v += step
    return out


def render_svg(series, *, xlabel, ylabel, title="", log_x=False, metadata=None) -> str:
    """Render ``{label: (xs, ys)}`` as polylines in a fixed viewport."""
    finite = [
        (x, y)
        for xs, ys in series.values()
        for x, y in zip(xs, ys)
        if math.isfinite(x) and math.isfinite(y) and (x > 0 or not log_x)
    ]
    if not finite:
        raise ValueError("nothing to plot")
    fx = (lambda v: math.log10(v)) if log_x else (lambda v: v)
    x0 = min(fx(x) for x, _ in finite)
    x1 = max(fx(x) for x, _ in finite)
    y0 = min(0.0, min(y for _, y in finite))
    y1 = max(y for _, y in finite)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (fx(x) - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN["top"] + (1 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">'
    ]
    if metadata:
        out.append(f"<metadata>{escape(metadata)}</metadata>")
    out.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    left, top = MARGIN["left"], MARGIN["top"]
    out.append(
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>'
    )
    for ty in _ticks(y0, y1):
        yy = py(ty)
        out.append(f'<line x1="{left - 4}" y1="{yy:.2f}" x2="{left}" y2="{yy:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 7}" y="{yy + 4:.2f}" text-anchor="end">{ty:g}</text>')
    if log_x:
        xticks = [10.0**k for k in range(math.ceil(x0), math.floor(x1) + 1)]
    else:
        xticks = _ticks(x0, x1)
    for tx in xticks:
        xx = px(tx)
        out.append(
            f'<line x1="{xx:.2f}" y1="{top + ph}" x2="{xx:.2f}" y2="{top + ph + 4}" stroke="black"/>'
        )
        out.append(f'<text x="{xx:.2f}" y="{top + ph + 18}" text-anchor="middle">{tx:g}</text>')
    out.append(
        f'<text x="{left + pw / 2}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>'
    )
    out.append(
        f'<text x="16" y="{top + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2})">{escape(ylabel)}</text>'
    )
    if title:
        out.append(f'<text x="{left + pw / 2}" y="24" text-anchor="middle">{escape(title)}</text>')
    for i, (label, (xs, ys)) in enumerate(series.items()):
        colour = COLOURS[i % len(COLOURS)]
        pts = " ".join(
            f"{px(x):.2f},{py(y):.2f}"
            for x, y in zip(xs, ys)
            if math.isfinite(x) and math.isfinite(y) and (x > 0 or not log_x)
        )
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        ly = top + 16 + 18 * i
        lx = left + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
