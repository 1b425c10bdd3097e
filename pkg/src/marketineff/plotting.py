"""Tiny SVG line plotter: lines on linear or logarithmic axes, nothing else."""

from __future__ import annotations

from pathlib import Path

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=20, top=36, bottom=50)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")


def _ticks(lo, hi, log):
    if log:
        return [10.0**k for k in range(int(np.floor(lo)), int(np.ceil(hi)) + 1) if lo <= k <= hi]
    step = 10 ** np.floor(np.log10((hi - lo) or 1.0))
    while (hi - lo) / step > 8:
        step *= 2
    start = np.ceil(lo / step) * step
    return list(np.arange(start, hi + step / 2, step))


def _fmt(v):
    return f"{v:.3g}"


def line_plot(path, series, title="", xlabel="", ylabel="", logx=False, logy=False) -> None:
    """Write an SVG with one polyline per ``(label, x, y)`` entry of ``series``.

    Points that cannot be drawn on a log axis (non-positive) are dropped.
    """
    cleaned = []
    for label, x, y in series:
        x, y = np.asarray(x, float), np.asarray(y, float)
        keep = np.isfinite(x) & np.isfinite(y)
        if logx:
            keep &= x > 0
        if logy:
            keep &= y > 0
        if keep.any():
            cleaned.append((label, x[keep], y[keep]))
    tx = (lambda v: np.log10(v)) if logx else (lambda v: v)
    ty = (lambda v: np.log10(v)) if logy else (lambda v: v)

    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
    ]
    if cleaned:
        xs = np.concatenate([tx(c[1]) for c in cleaned])
        ys = np.concatenate([ty(c[2]) for c in cleaned])
        x0, x1 = xs.min(), xs.max()
        y0, y1 = ys.min(), ys.max()
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5

        def px(v):
            return MARGIN["left"] + (v - x0) / (x1 - x0) * pw

        def py(v):
            return MARGIN["top"] + ph - (v - y0) / (y1 - y0) * ph

        parts.append(f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
                     'fill="none" stroke="black"/>')
        for t in _ticks(x0, x1, logx):
            p = px(np.log10(t) if logx else t)
            parts.append(f'<line x1="{p:.2f}" y1="{MARGIN["top"] + ph}" x2="{p:.2f}" '
                         f'y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
            parts.append(f'<text x="{p:.2f}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle">{_fmt(t)}</text>')
        for t in _ticks(y0, y1, logy):
            p = py(np.log10(t) if logy else t)
            parts.append(f'<line x1="{MARGIN["left"] - 5}" y1="{p:.2f}" x2="{MARGIN["left"]}" '
                         f'y2="{p:.2f}" stroke="black"/>')
            parts.append(f'<text x="{MARGIN["left"] - 8}" y="{p + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
        for k, (label, x, y) in enumerate(cleaned):
            color = COLORS[k % len(COLORS)]
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(tx(x), ty(y)))
            parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.2"/>')
            ly = MARGIN["top"] + 14 + 15 * k
            parts.append(f'<text x="{MARGIN["left"] + pw - 6}" y="{ly}" text-anchor="end" '
                         f'fill="{color}">{label}</text>')
    parts.append(f'<text x="{MARGIN["left"] + pw / 2}" y="{HEIGHT - 10}" text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="16" y="{MARGIN["top"] + ph / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2})">{ylabel}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
