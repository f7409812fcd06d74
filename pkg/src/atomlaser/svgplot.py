"""Minimal log-log SVG line plot, written without a plotting library."""

from __future__ import annotations

import math
from datetime import datetime, timezone
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 480
MARGIN = dict(left=80, right=200, top=30, bottom=60)
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _decades(lo: float, hi: float):
    return range(math.floor(math.log10(lo)), math.ceil(math.log10(hi)) + 1)


def loglog_svg(series: dict, xlabel: str, ylabel: str, title: str = "",
               timestamp: bool = True) -> str:
    """Render ``{label: (xs, ys, style)}`` as an SVG document.

    ``style`` is ``"line"`` or ``"markers"``.  Non-positive or missing
    points are skipped.
    """
    pts = {k: [(x, y) for x, y in zip(xs, ys) if x and y and x > 0 and y > 0]
           for k, (xs, ys, _) in series.items()}
    xs = [x for p in pts.values() for x, _ in p]
    ys = [y for p in pts.values() for _, y in p]
    if not xs:
        raise ValueError("nothing to plot")
    x_dec, y_dec = _decades(min(xs), max(xs)), _decades(min(ys), max(ys))
    lx0, lx1 = x_dec[0], x_dec[-1] if x_dec[-1] > x_dec[0] else x_dec[0] + 1
    ly0, ly1 = y_dec[0], y_dec[-1] if y_dec[-1] > y_dec[0] else y_dec[0] + 1
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return MARGIN["left"] + pw * (math.log10(x) - lx0) / (lx1 - lx0)

    def sy(y):
        return MARGIN["top"] + ph * (1 - (math.log10(y) - ly0) / (ly1 - ly0))

    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">']
    if timestamp:
        out.append(f"<!-- generated {datetime.now(timezone.utc).isoformat(timespec='seconds')} -->")
    out.append(f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
               'fill="white" stroke="black"/>')
    for k in range(lx0, lx1 + 1):
        x = sx(10.0**k)
        out.append(f'<line x1="{x:.2f}" y1="{MARGIN["top"]}" x2="{x:.2f}" '
                   f'y2="{MARGIN["top"] + ph}" stroke="#ddd"/>')
        out.append(f'<text x="{x:.2f}" y="{MARGIN["top"] + ph + 18}" '
                   f'text-anchor="middle">1e{k}</text>')
    for k in range(ly0, ly1 + 1):
        y = sy(10.0**k)
        out.append(f'<line x1="{MARGIN["left"]}" y1="{y:.2f}" x2="{MARGIN["left"] + pw}" '
                   f'y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{y + 4:.2f}" '
                   f'text-anchor="end">1e{k}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2}" y="{HEIGHT - 15}" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="20" y="{MARGIN["top"] + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 20 {MARGIN["top"] + ph / 2})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{MARGIN["left"] + pw / 2}" y="20" '
                   f'text-anchor="middle">{escape(title)}</text>')

    for i, (label, (_, _, style)) in enumerate(series.items()):
        colour = PALETTE[i % len(PALETTE)]
        p = pts[label]
        if style == "markers":
            for x, y in p:
                out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="{colour}"/>')
        elif p:
            path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in p)
            out.append(f'<polyline points="{path}" fill="none" stroke="{colour}" '
                       'stroke-width="1.5"/>')
        ly = MARGIN["top"] + 20 + 20 * i
        lx = MARGIN["left"] + pw + 15
        if style == "markers":
            out.append(f'<circle cx="{lx + 12}" cy="{ly - 4}" r="3" fill="{colour}"/>')
        else:
            out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" '
                       f'stroke="{colour}" stroke-width="1.5"/>')
        out.append(f'<text x="{lx + 30}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
