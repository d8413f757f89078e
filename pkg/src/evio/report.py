"""Self-contained SVG plot of ground truth against predicted trajectories."""
from __future__ import annotations

from typing import Mapping
from xml.sax.saxutils import escape

import numpy as np

from .events import LabelTrack, Trajectory

PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
GT_COLOUR = "#000000"


def _polyline(xs, ys, colour: str, width: float = 1.0) -> str:
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    return f'<polyline fill="none" stroke="{colour}" stroke-width="{width}" points="{pts}"/>'


def _text(x, y, s, size=11, anchor="start") -> str:
    return f'<text x="{x:.1f}" y="{y:.1f}" font-size="{size}" text-anchor="{anchor}">{escape(s)}</text>'


def _scale(v, lo, hi, a, b):
    span = hi - lo if hi > lo else 1.0
    return a + (np.asarray(v, dtype=np.float64) - lo) / span * (b - a)


def _panel(x0, y0, w, h, title, series, x_range, y_range, flip_y=True) -> list[str]:
    out = [f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#999999"/>',
           _text(x0 + 4, y0 - 6, title)]
    for xs, ys, colour, lw in series:
        px = _scale(xs, *x_range, x0, x0 + w)
        py = _scale(ys, *y_range, y0 + h, y0) if flip_y else _scale(ys, *y_range, y0, y0 + h)
        out.append(_polyline(px, py, colour, lw))
    return out


def trajectory_svg(track: LabelTrack, preds: Mapping[str, Trajectory]) -> str:
    """Spatial plot plus x(t) and y(t) panels; blink labels are drawn as recorded."""
    gt = track.points
    everything = [gt] + [p.points for p in preds.values()]
    allpts = np.concatenate(everything) if everything else gt
    xr = (float(allpts[:, 0].min()) - 1, float(allpts[:, 0].max()) + 1)
    yr = (float(allpts[:, 1].min()) - 1, float(allpts[:, 1].max()) + 1)
    t = track.t_us * 1e-6
    tr = (float(t[0]), float(t[-1])) if len(t) else (0.0, 1.0)

    W, H = 960, 560
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
             '<rect width="100%" height="100%" fill="#ffffff"/>']
    named = [("ground truth", gt, GT_COLOUR, 1.5)] + [
        (name, p.points, PALETTE[i % len(PALETTE)], 1.0) for i, (name, p) in enumerate(preds.items())]

    # image coordinates: y grows downward, so the spatial panel is not flipped
    parts += _panel(40, 40, 380, 300, "pupil centre (px)",
                    [(pts[:, 0], pts[:, 1], c, lw) for _, pts, c, lw in named], xr, yr, flip_y=False)
    parts += _panel(480, 40, 440, 200, "x (px) vs time (s)",
                    [(t, pts[:, 0], c, lw) for _, pts, c, lw in named], tr, xr)
    parts += _panel(480, 300, 440, 200, "y (px) vs time (s)",
                    [(t, pts[:, 1], c, lw) for _, pts, c, lw in named], tr, yr)
    for k, (name, _, colour, _) in enumerate(named):
        y = 380 + 18 * k
        parts.append(f'<line x1="40" y1="{y - 4}" x2="64" y2="{y - 4}" stroke="{colour}" stroke-width="2"/>')
        parts.append(_text(70, y, name))
    parts.append(_text(480, 530, f"t = {tr[0]:.2f} .. {tr[1]:.2f} s"))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
