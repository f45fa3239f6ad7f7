"""Minimal hand-rolled SVG scatter plots.

Rendering stays dependency-free on purpose: runs often happen on headless
boxes, and an SVG plus the matching CSV point dump is all the harness
promises. Layers are optional shading (satisfactory region), threshold
lines, and the observation markers colored by satisfaction.
"""

from __future__ import annotations

import numpy as np

WIDTH = 640
HEIGHT = 520
MARGIN = 56


def _axis_limits(values: np.ndarray, fallback=(0.0, 1.0)) -> tuple[float, float]:
    if values.size == 0:
        return fallback
    lo = float(values.min())
    hi = float(values.max())
    if lo == hi:
        lo -= 0.5
        hi += 0.5
    pad = 0.06 * (hi - lo)
    return lo - pad, hi + pad


class ScatterSVG:
    """Accumulates layers, then renders one self-contained SVG string."""

    def __init__(self, xlim, ylim, xlabel: str, ylabel: str, title: str):
        self.xlim = xlim
        self.ylim = ylim
        self.xlabel = xlabel
        self.ylabel = ylabel
        self.title = title
        self.body: list[str] = []

    def _sx(self, x: float) -> float:
        lo, hi = self.xlim
        return MARGIN + (x - lo) / (hi - lo) * (WIDTH - 2 * MARGIN)

    def _sy(self, y: float) -> float:
        lo, hi = self.ylim
        return HEIGHT - MARGIN - (y - lo) / (hi - lo) * (HEIGHT - 2 * MARGIN)

    def add_shading(self, points: np.ndarray, radius: float = 2.2, color: str = "#cfe8cf"):
        """Faint dots marking a region sample (drawn under everything else)."""
        dots = [
            f'<circle cx="{self._sx(px):.1f}" cy="{self._sy(py):.1f}" r="{radius}" '
            f'fill="{color}"/>'
            for px, py in points
        ]
        self.body.insert(0, "".join(dots))

    def add_hspan_rows(self, rows: list[tuple[float, float, float, float]], color: str = "#cfe8cf"):
        """Shaded horizontal bars (x0, x1, y0, y1) in data coordinates."""
        rects = []
        for x0, x1, y0, y1 in rows:
            sx, sy = self._sx(x0), self._sy(y1)
            w = self._sx(x1) - sx
            h = self._sy(y0) - sy
            rects.append(
                f'<rect x="{sx:.1f}" y="{sy:.1f}" width="{w:.1f}" height="{h:.1f}" '
                f'fill="{color}"/>'
            )
        self.body.insert(0, "".join(rects))

    def add_threshold_lines(self, tx: float | None = None, ty: float | None = None):
        style = 'stroke="#c04040" stroke-width="1.2" stroke-dasharray="6,4"'
        if tx is not None and self.xlim[0] <= tx <= self.xlim[1]:
            sx = self._sx(tx)
            self.body.append(
                f'<line x1="{sx:.1f}" y1="{MARGIN}" x2="{sx:.1f}" y2="{HEIGHT - MARGIN}" {style}/>'
            )
        if ty is not None and self.ylim[0] <= ty <= self.ylim[1]:
            sy = self._sy(ty)
            self.body.append(
                f'<line x1="{MARGIN}" y1="{sy:.1f}" x2="{WIDTH - MARGIN}" y2="{sy:.1f}" {style}/>'
            )

    def add_points(self, points: np.ndarray, satisfactory: np.ndarray):
        for (px, py), sat in zip(points, satisfactory):
            color = "#2c7a2c" if sat else "#555577"
            self.body.append(
                f'<circle cx="{self._sx(px):.1f}" cy="{self._sy(py):.1f}" r="4" '
                f'fill="{color}" fill-opacity="0.85" stroke="#222" stroke-width="0.6"/>'
            )

    def _ticks(self, lo: float, hi: float, count: int = 5) -> list[float]:
        return [lo + (hi - lo) * i / (count - 1) for i in range(count)]

    def render(self) -> str:
        frame = [
            f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
            f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="#333" stroke-width="1"/>'
        ]
        for tx in self._ticks(*self.xlim):
            sx = self._sx(tx)
            frame.append(
                f'<line x1="{sx:.1f}" y1="{HEIGHT - MARGIN}" x2="{sx:.1f}" '
                f'y2="{HEIGHT - MARGIN + 5}" stroke="#333"/>'
                f'<text x="{sx:.1f}" y="{HEIGHT - MARGIN + 18}" font-size="11" '
                f'text-anchor="middle">{tx:.3g}</text>'
            )
        for ty in self._ticks(*self.ylim):
            sy = self._sy(ty)
            frame.append(
                f'<line x1="{MARGIN - 5}" y1="{sy:.1f}" x2="{MARGIN}" y2="{sy:.1f}" stroke="#333"/>'
                f'<text x="{MARGIN - 8}" y="{sy + 4:.1f}" font-size="11" '
                f'text-anchor="end">{ty:.3g}</text>'
            )
        labels = (
            f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" font-size="13" '
            f'text-anchor="middle">{self.xlabel}</text>'
            f'<text x="16" y="{HEIGHT / 2}" font-size="13" text-anchor="middle" '
            f'transform="rotate(-90 16 {HEIGHT / 2})">{self.ylabel}</text>'
            f'<text x="{WIDTH / 2}" y="24" font-size="15" text-anchor="middle">{self.title}</text>'
        )
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">'
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>'
            + "".join(self.body)
            + "".join(frame)
            + labels
            + "</svg>"
        )


def scatter_plot(
    points: np.ndarray,
    satisfactory: np.ndarray,
    xlabel: str,
    ylabel: str,
    title: str,
    thresholds: tuple[float | None, float | None] = (None, None),
    shading: np.ndarray | None = None,
    shading_rows: list[tuple[float, float, float, float]] | None = None,
) -> str:
    pts = np.atleast_2d(np.asarray(points, dtype=float)) if np.size(points) else np.zeros((0, 2))
    xlim = _axis_limits(pts[:, 0] if pts.size else np.zeros(0))
    ylim = _axis_limits(pts[:, 1] if pts.size else np.zeros(0))
    svg = ScatterSVG(xlim, ylim, xlabel, ylabel, title)
    if shading is not None and np.size(shading):
        svg.add_shading(np.atleast_2d(shading))
    if shading_rows:
        svg.add_hspan_rows(shading_rows)
    svg.add_threshold_lines(*thresholds)
    if pts.size:
        svg.add_points(pts, np.asarray(satisfactory, dtype=bool))
    return svg.render()
