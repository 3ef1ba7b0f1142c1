"""Minimal self-contained SVG charts: scatter, polyline, heat map, contours.

Every figure uses a fixed 800x600 viewBox and deterministic number
formatting so output files are byte-stable.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 800, 600
MARGIN = dict(left=80, right=30, top=50, bottom=60)

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd")


def _n(x):
    return f"{x:.2f}"


def _ticks(lo, hi, k=5):
    if hi <= lo:
        return [lo]
    return list(np.linspace(lo, hi, k))


def _limits(v, pad=0.05, include_zero=False):
    v = np.asarray(v, dtype=float)
    v = v[np.isfinite(v)]
    lo, hi = (float(v.min()), float(v.max())) if v.size else (0.0, 1.0)
    if include_zero:
        lo = min(lo, 0.0)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    span = hi - lo
    return lo - pad * span * (not include_zero or lo < 0), hi + pad * span


def _colour(t):
    """Blue-white-red ramp for t in [0, 1]."""
    t = float(np.clip(t, 0.0, 1.0))
    if t < 0.5:
        s = t / 0.5
        r, g, b = 49 + s * (247 - 49), 54 + s * (247 - 54), 149 + s * (247 - 149)
    else:
        s = (t - 0.5) / 0.5
        r, g, b = 247 + s * (165 - 247), 247 + s * (0 - 247), 247 + s * (38 - 247)
    return f"#{int(round(r)):02x}{int(round(g)):02x}{int(round(b)):02x}"


class Figure:
    """One set of axes on an 800x600 canvas."""

    def __init__(self, xlim, ylim, title="", xlabel="", ylabel=""):
        self.xlim, self.ylim = xlim, ylim
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.body = []

    def px(self, x, y):
        x0, x1 = self.xlim
        y0, y1 = self.ylim
        w = WIDTH - MARGIN["left"] - MARGIN["right"]
        h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
        return (
            MARGIN["left"] + (x - x0) / (x1 - x0) * w,
            HEIGHT - MARGIN["bottom"] - (y - y0) / (y1 - y0) * h,
        )

    def scatter(self, x, y, colour=PALETTE[0], r=3.0, cls="point", fill_values=None):
        for k, (a, b) in enumerate(zip(x, y)):
            cx, cy = self.px(a, b)
            fill = colour if fill_values is None else fill_values[k]
            self.body.append(
                f'<circle class="{cls}" cx="{_n(cx)}" cy="{_n(cy)}" r="{_n(r)}" '
                f'fill="{fill}" fill-opacity="0.8" stroke="#333" stroke-width="0.5"/>'
            )

    def line(self, x, y, colour=PALETTE[1], width=2.0, cls="curve"):
        pts = " ".join(f"{_n(a)},{_n(b)}" for a, b in (self.px(u, v) for u, v in zip(x, y)))
        self.body.append(
            f'<polyline class="{cls}" points="{pts}" fill="none" stroke="{colour}" '
            f'stroke-width="{_n(width)}"/>'
        )

    def heatmap(self, xs, ys, values, vmin=None, vmax=None):
        """Cells centred on the lattice ``xs`` by ``ys``; ``values[iy, ix]``."""
        values = np.asarray(values, dtype=float)
        vmin = float(np.min(values)) if vmin is None else vmin
        vmax = float(np.max(values)) if vmax is None else vmax
        span = vmax - vmin if vmax > vmin else 1.0
        dx = (xs[-1] - xs[0]) / max(len(xs) - 1, 1)
        dy = (ys[-1] - ys[0]) / max(len(ys) - 1, 1)
        for iy, yc in enumerate(ys):
            for ix, xc in enumerate(xs):
                xa, ya = self.px(xc - dx / 2, yc + dy / 2)
                xb, yb = self.px(xc + dx / 2, yc - dy / 2)
                self.body.append(
                    f'<rect class="cell" x="{_n(xa)}" y="{_n(ya)}" width="{_n(xb - xa)}" '
                    f'height="{_n(yb - ya)}" fill="{_colour((values[iy, ix] - vmin) / span)}"/>'
                )

    def contours(self, xs, ys, values, levels, colour="#222"):
        for level in levels:
            for (xa, ya), (xb, yb) in contour_segments(xs, ys, values, level):
                pa, pb = self.px(xa, ya), self.px(xb, yb)
                self.body.append(
                    f'<line class="contour" x1="{_n(pa[0])}" y1="{_n(pa[1])}" '
                    f'x2="{_n(pb[0])}" y2="{_n(pb[1])}" stroke="{colour}" stroke-width="1"/>'
                )

    def _axes(self):
        out = []
        x0, y0 = self.px(self.xlim[0], self.ylim[0])
        x1, y1 = self.px(self.xlim[1], self.ylim[1])
        out.append(
            f'<rect class="frame" x="{_n(x0)}" y="{_n(y1)}" width="{_n(x1 - x0)}" '
            f'height="{_n(y0 - y1)}" fill="none" stroke="#000"/>'
        )
        for t in _ticks(*self.xlim):
            px, _ = self.px(t, self.ylim[0])
            out.append(f'<text class="tick" x="{_n(px)}" y="{_n(y0 + 18)}" '
                       f'font-size="12" text-anchor="middle">{t:.3g}</text>')
        for t in _ticks(*self.ylim):
            _, py = self.px(self.xlim[0], t)
            out.append(f'<text class="tick" x="{_n(x0 - 8)}" y="{_n(py + 4)}" '
                       f'font-size="12" text-anchor="end">{t:.3g}</text>')
        out.append(f'<text x="{WIDTH / 2:.2f}" y="30" font-size="16" '
                   f'text-anchor="middle">{escape(self.title)}</text>')
        out.append(f'<text x="{WIDTH / 2:.2f}" y="{HEIGHT - 15}" font-size="13" '
                   f'text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(f'<text x="20" y="{HEIGHT / 2:.2f}" font-size="13" text-anchor="middle" '
                   f'transform="rotate(-90 20 {HEIGHT / 2:.2f})">{escape(self.ylabel)}</text>')
        return out

    def to_string(self):
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
            f'width="{WIDTH}" height="{HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            *self.body,
            *self._axes(),
            "</svg>",
        ]
        return "\n".join(parts) + "\n"

    def save(self, path):
        Path(path).write_text(self.to_string(), encoding="utf-8", newline="\n")


def contour_segments(xs, ys, values, level):
    """Marching-squares line segments of ``values[iy, ix] == level``."""
    v = np.asarray(values, dtype=float)
    segs = []

    def cross(pa, pb, va, vb):
        t = (level - va) / (vb - va)
        return (pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]))

    for iy in range(len(ys) - 1):
        for ix in range(len(xs) - 1):
            corners = [
                ((xs[ix], ys[iy]), v[iy, ix]),
                ((xs[ix + 1], ys[iy]), v[iy, ix + 1]),
                ((xs[ix + 1], ys[iy + 1]), v[iy + 1, ix + 1]),
                ((xs[ix], ys[iy + 1]), v[iy + 1, ix]),
            ]
            pts = []
            for k in range(4):
                (pa, va), (pb, vb) = corners[k], corners[(k + 1) % 4]
                if (va < level) != (vb < level):
                    pts.append(cross(pa, pb, va, vb))
            if len(pts) == 2:
                segs.append((pts[0], pts[1]))
            elif len(pts) == 4:
                segs.append((pts[0], pts[1]))
                segs.append((pts[2], pts[3]))
    return segs


def variogram_figure(h, v, title, binned=None, curve=None, xlabel="lag distance h"):
    """Cloud scatter with optional binned means and a fitted model curve."""
    xlim = _limits(h, include_zero=True)
    ys = [v]
    if curve is not None:
        ys.append(curve(np.linspace(0, xlim[1], 2)))
    ylim = _limits(np.concatenate([np.ravel(a) for a in ys]), include_zero=True)
    fig = Figure(xlim, ylim, title, xlabel, "semivariance")
    fig.scatter(h, v, PALETTE[0], 2.5)
    if binned is not None:
        fig.scatter(binned.h_center, binned.gamma, PALETTE[3], 5.0, cls="bin")
    if curve is not None:
        hh = np.linspace(0.0, xlim[1], 200)
        fig.line(hh, curve(hh))
    return fig
