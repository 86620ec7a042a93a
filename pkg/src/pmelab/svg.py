"""Minimal SVG line plots (log-log), written directly as text."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape


def loglog_svg(series, title="", xlabel="r", ylabel="oscillation", width=480, height=360) -> str:
    """``series``: list of ``(label, xs, ys)``; non-positive values are skipped."""
    pts_all = [(x, y) for _, xs, ys in series for x, y in zip(xs, ys) if x > 0 and y > 0]
    if not pts_all:
        pts_all = [(1.0, 1.0), (10.0, 10.0)]
    lx = [math.log10(x) for x, _ in pts_all]
    ly = [math.log10(y) for _, y in pts_all]
    x0, x1 = min(lx), max(lx)
    y0, y1 = min(ly), max(ly)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    ml, mr, mt, mb = 60, 20, 30, 45
    W, H = width - ml - mr, height - mt - mb

    def sx(v):
        return ml + (math.log10(v) - x0) / (x1 - x0) * W

    def sy(v):
        return mt + H - (math.log10(v) - y0) / (y1 - y0) * H

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<rect x="{ml}" y="{mt}" width="{W}" height="{H}" fill="none" stroke="#333"/>',
           f'<text x="{width / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
           f'<text x="{ml + W / 2}" y="{height - 8}" text-anchor="middle" font-size="12">'
           f'log10 {escape(xlabel)}</text>',
           f'<text x="14" y="{mt + H / 2}" text-anchor="middle" font-size="12" '
           f'transform="rotate(-90 14 {mt + H / 2})">log10 {escape(ylabel)}</text>',
           f'<text x="{ml}" y="{mt + H + 15}" font-size="10">{x0:.2f}</text>',
           f'<text x="{ml + W}" y="{mt + H + 15}" font-size="10" text-anchor="end">{x1:.2f}</text>',
           f'<text x="{ml - 4}" y="{mt + H}" font-size="10" text-anchor="end">{y0:.2f}</text>',
           f'<text x="{ml - 4}" y="{mt + 10}" font-size="10" text-anchor="end">{y1:.2f}</text>']
    for i, (label, xs, ys) in enumerate(series):
        c = colors[i % len(colors)]
        pts = [(sx(x), sy(y)) for x, y in zip(xs, ys) if x > 0 and y > 0]
        if pts:
            poly = " ".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            out.append(f'<polyline points="{poly}" fill="none" stroke="{c}" stroke-width="1.5"/>')
            for a, b in pts:
                out.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2.5" fill="{c}"/>')
        out.append(f'<text x="{ml + 8}" y="{mt + 16 + 14 * i}" font-size="11" fill="{c}">'
                   f'{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
