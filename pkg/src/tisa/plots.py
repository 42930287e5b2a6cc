"""Self-contained SVG scatter plots of the instance space.

Output bytes depend only on the inputs: fixed float formatting, no
timestamps, no random ids.
"""

from __future__ import annotations

import re
from html import escape
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

WIDTH, HEIGHT = 480, 420
MARGIN = 40
LEGEND_H = 40
FAIL_COLOR = "#1f4e9c"
SAFE_COLOR = "#d62728"
# viridis-like ramp endpoints and midpoint
RAMP = [(68, 1, 84), (33, 145, 140), (253, 231, 37)]


def _ramp(t: float) -> str:
    t = min(max(t, 0.0), 1.0)
    if t <= 0.5:
        a, b, u = RAMP[0], RAMP[1], t / 0.5
    else:
        a, b, u = RAMP[1], RAMP[2], (t - 0.5) / 0.5
    r, g, bl = (round(a[i] + (b[i] - a[i]) * u) for i in range(3))
    return f"#{r:02x}{g:02x}{bl:02x}"


class _Frame:
    """Maps instance-space coordinates to SVG pixels (y axis flipped)."""

    def __init__(self, points: np.ndarray):
        lo = points.min(axis=0)
        hi = points.max(axis=0)
        span = np.where(hi - lo > 0, hi - lo, 1.0)
        self.lo = lo - 0.05 * span
        self.span = span * 1.1
        self.w = WIDTH - 2 * MARGIN
        self.h = HEIGHT - 2 * MARGIN - LEGEND_H

    def __call__(self, pts) -> np.ndarray:
        p = np.asarray(pts, dtype=float).reshape(-1, 2)
        x = MARGIN + (p[:, 0] - self.lo[0]) / self.span[0] * self.w
        y = MARGIN + self.h - (p[:, 1] - self.lo[1]) / self.span[1] * self.h
        return np.column_stack([x, y])


def render_scatter(
    coords,
    values=None,
    coloring: str = "outcome",
    title: str = "",
    hull: Optional[np.ndarray] = None,
    footprint_path: Optional[str] = None,
    label: str = "",
) -> str:
    """SVG text. ``coloring`` is ``"outcome"`` (values are 0/1) or
    ``"feature"`` (values mapped onto a colour ramp)."""
    pts = np.asarray(coords, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("nothing to plot")
    if coloring not in ("outcome", "feature"):
        raise ValueError(f"coloring must be 'outcome' or 'feature', got {coloring!r}")
    frame_pts = pts if hull is None else np.vstack([pts, np.asarray(hull, dtype=float).reshape(-1, 2)])
    frame = _Frame(frame_pts)
    px = frame(pts)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{frame.w}" height="{frame.h}" fill="none" stroke="#888"/>',
    ]
    if footprint_path:
        out.append(f'<path d="{footprint_path}" fill="#999" fill-opacity="0.15" fill-rule="evenodd" stroke="none"/>')

    if coloring == "outcome":
        y = np.asarray(values).astype(int).ravel()
        colors = np.where(y == 1, FAIL_COLOR, SAFE_COLOR)
    else:
        v = np.asarray(values, dtype=float).ravel()
        vmin, vmax = float(v.min()), float(v.max())
        span = vmax - vmin if vmax > vmin else 1.0
        colors = [_ramp((val - vmin) / span) for val in v]
    for (x, yy), c in zip(px, colors):
        out.append(f'<circle cx="{x:.2f}" cy="{yy:.2f}" r="2" fill="{c}" fill-opacity="0.8"/>')

    if hull is not None:
        hp = frame(hull)
        pts_attr = " ".join(f"{x:.2f},{yy:.2f}" for x, yy in hp)
        out.append(f'<polygon points="{pts_attr}" fill="none" stroke="black" stroke-width="1.5"/>')

    ly = HEIGHT - LEGEND_H + 10
    out.append('<g class="legend" font-family="sans-serif" font-size="11">')
    if coloring == "outcome":
        out.append(f'<rect x="{MARGIN}" y="{ly}" width="10" height="10" fill="{FAIL_COLOR}"/>')
        out.append(f'<text x="{MARGIN + 14}" y="{ly + 9}">failed</text>')
        out.append(f'<rect x="{MARGIN + 80}" y="{ly}" width="10" height="10" fill="{SAFE_COLOR}"/>')
        out.append(f'<text x="{MARGIN + 94}" y="{ly + 9}">safe</text>')
    else:
        steps = 20
        bw = (WIDTH - 2 * MARGIN - 120) / steps
        for i in range(steps):
            out.append(
                f'<rect x="{MARGIN + 60 + i * bw:.2f}" y="{ly}" width="{bw + 0.5:.2f}" height="10" fill="{_ramp(i / (steps - 1))}"/>'
            )
        out.append(f'<text x="{MARGIN}" y="{ly + 9}">{vmin:.4g}</text>')
        out.append(f'<text x="{WIDTH - MARGIN - 55}" y="{ly + 9}">{vmax:.4g}</text>')
        if label:
            out.append(f'<text x="{WIDTH / 2:.1f}" y="{ly + 24}" text-anchor="middle">{escape(label)}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg_scatter(coords, values, path, coloring: str = "outcome", hull=None, title: str = "", **kw) -> Path:
    path = Path(path)
    text = render_scatter(coords, values, coloring, title=title, hull=hull, **kw)
    path.write_bytes(text.encode("utf-8"))
    return path


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "feature"


def write_instance_space_plots(space, out_dir) -> list[Path]:
    """Outcome distribution, one plot per selected feature, and the boundary
    overlay. Returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    coords = space.coords
    outcomes = space.suite.outcomes
    paths = [
        emit_svg_scatter(coords, outcomes, out_dir / "instance_space_outcome.svg", title="Scenario outcome distribution")
    ]
    for idx, name in zip(space.selection.selected, space.selected_names):
        paths.append(
            emit_svg_scatter(
                coords,
                space.suite.features[:, idx],
                out_dir / f"instance_space_feature_{_slug(name)}.svg",
                coloring="feature",
                title=f"Feature: {name}",
                label=name,
            )
        )
    hull = space.hull.vertices_2d if space.hull is not None else None
    frame_pts = coords if hull is None else np.vstack([coords, hull])
    frame = _Frame(frame_pts)
    paths.append(
        emit_svg_scatter(
            coords,
            outcomes,
            out_dir / "instance_space_boundary.svg",
            hull=hull,
            title="Footprint and boundary",
            footprint_path=space.footprint.svg_path(frame) or None,
        )
    )
    return paths
