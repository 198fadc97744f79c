"""SVG heatmaps drawn as one filled patch per grid node (no smoothing).

Colormaps: ``sequential`` runs dark blue -> teal -> yellow over [min, max];
``diverging`` runs blue -> white -> red over [-m, m] with m = max|value|.
"""

from __future__ import annotations

import math

import numpy as np

from .discretization import ScalarField

__all__ = ["colour", "heatmap_svg", "write_heatmaps"]

_SEQ = [(0.0, (48, 18, 59)), (0.35, (33, 145, 140)), (0.7, (144, 215, 67)), (1.0, (253, 231, 37))]
_DIV = [(0.0, (33, 102, 172)), (0.5, (247, 247, 247)), (1.0, (178, 24, 43))]


def colour(t: float, cmap: str = "sequential") -> str:
    stops = _SEQ if cmap == "sequential" else _DIV
    t = min(max(float(t), 0.0), 1.0)
    for (t0, c0), (t1, c1) in zip(stops, stops[1:]):
        if t <= t1:
            s = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
            rgb = [round(a + s * (b - a)) for a, b in zip(c0, c1)]
            return "#{:02x}{:02x}{:02x}".format(*rgb)
    return "#{:02x}{:02x}{:02x}".format(*stops[-1][1])


def _edges(nodes: np.ndarray, lo: float, hi: float) -> np.ndarray:
    mid = 0.5 * (nodes[1:] + nodes[:-1])
    return np.concatenate([[lo], mid, [hi]])


def _patches(field: ScalarField, size: float):
    """Yield (node index, polygon points) in drawing coordinates."""
    g = field.grid
    if g.cartesian:
        xe = _edges(g.theta, 0.0, g.beta)
        ye = _edges(g.r, 0.0, g.dom.width)
        scale = size / max(g.beta, g.dom.width)
        for i in range(g.n_r):
            for j in range(g.n_theta):
                x0, x1 = xe[j] * scale, xe[j + 1] * scale
                y0, y1 = (g.dom.width - ye[i + 1]) * scale, (g.dom.width - ye[i]) * scale
                yield (i, j), [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
        return
    re = _edges(g.r, g.dom.r_inner, g.dom.r_outer)
    te = _edges(g.theta, 0.0, g.beta)
    R = g.dom.r_outer
    scale = size / (2.0 * R)
    for i in range(g.n_r):
        for j in range(g.n_theta):
            steps = max(1, int(math.ceil((te[j + 1] - te[j]) / 0.05)))
            ts = np.linspace(te[j], te[j + 1], steps + 1)
            outer = [(re[i + 1] * math.cos(t), re[i + 1] * math.sin(t)) for t in ts]
            inner = [(re[i] * math.cos(t), re[i] * math.sin(t)) for t in ts[::-1]]
            pts = [((x + R) * scale, (R - y) * scale) for x, y in outer + inner]
            yield (i, j), pts


def heatmap_svg(field: ScalarField, title: str, cmap: str = "sequential", size: float = 320.0) -> str:
    v = field.values
    if cmap == "diverging":
        m = float(np.abs(v).max()) or 1.0
        lo, hi = -m, m
    else:
        lo, hi = float(v.min()), float(v.max())
        if hi == lo:
            hi = lo + 1.0
    parts = [f'<g><title>{title}</title><text x="4" y="14" font-size="12" font-family="sans-serif">{title}'
             f" [{lo:.4g}, {hi:.4g}]</text><g transform=\"translate(0,20)\">"]
    for (i, j), pts in _patches(field, size):
        c = colour((v[i, j] - lo) / (hi - lo), cmap)
        d = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
        parts.append(f'<polygon points="{d}" fill="{c}" stroke="{c}" stroke-width="0.3"/>')
    parts.append("</g></g>")
    return "\n".join(parts)


def write_heatmaps(path, panels: list[tuple[ScalarField, str, str]], size: float = 320.0) -> None:
    """Side-by-side panels of (field, title, cmap) in one SVG file."""
    width = len(panels) * (size + 20)
    height = size + 30
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
           f'viewBox="0 0 {width:.0f} {height:.0f}">']
    for k, (f, title, cmap) in enumerate(panels):
        out.append(f'<g transform="translate({k * (size + 20):.0f},0)">')
        out.append(heatmap_svg(f, title, cmap, size))
        out.append("</g>")
    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
