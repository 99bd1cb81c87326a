"""Hand-emitted SVG for traced curves: polylines, axes, labels.

No rendering dependency; path data carries 6 significant digits, so output
is byte-stable and diffable in golden-file tests.
"""

from __future__ import annotations

import numpy as np

_COLORS = ("#1f6fb4", "#c23b22", "#2e8b57", "#8860b0")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


class SvgCanvas:
    def __init__(self, window: float, size: int = 480, margin: int = 40):
        self.window = float(window)
        self.size = size
        self.margin = margin
        self.body: list[str] = []

    def _map(self, x: float, y: float) -> tuple[float, float]:
        span = self.size - 2 * self.margin
        w = self.window if self.window > 0 else 1.0
        px = self.margin + (x + w) / (2 * w) * span
        py = self.margin + (w - y) / (2 * w) * span
        return px, py

    def polyline(self, points: np.ndarray, color: str, width: float = 1.5) -> None:
        if len(points) == 0:
            return
        coords = " ".join("{},{}".format(_fmt(px), _fmt(py))
                          for px, py in (self._map(x, y) for x, y in points))
        self.body.append(f'<polyline fill="none" stroke="{color}" '
                         f'stroke-width="{_fmt(width)}" points="{coords}"/>')

    def axes(self, xlabel: str, ylabel: str) -> None:
        x0, y0 = self._map(-self.window, 0.0)
        x1, y1 = self._map(self.window, 0.0)
        self.body.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x1)}" '
                         f'y2="{_fmt(y1)}" stroke="#999" stroke-width="0.8"/>')
        x0, y0 = self._map(0.0, -self.window)
        x1, y1 = self._map(0.0, self.window)
        self.body.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x1)}" '
                         f'y2="{_fmt(y1)}" stroke="#999" stroke-width="0.8"/>')
        px, py = self._map(self.window, 0.0)
        self.body.append(f'<text x="{_fmt(px - 16)}" y="{_fmt(py - 6)}" '
                         f'font-size="12">{xlabel}</text>')
        px, py = self._map(0.0, self.window)
        self.body.append(f'<text x="{_fmt(px + 6)}" y="{_fmt(py + 12)}" '
                         f'font-size="12">{ylabel}</text>')
        lab = _fmt(self.window)
        self.body.append(f'<text x="{_fmt(self.margin)}" y="{_fmt(self.size - 8)}" '
                         f'font-size="10">window = {lab}</text>')

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.size}" '
                f'height="{self.size}" viewBox="0 0 {self.size} {self.size}">')
        bg = f'<rect width="{self.size}" height="{self.size}" fill="white"/>'
        return "\n".join([head, bg, *self.body, "</svg>"]) + "\n"


def curve_svg(curve, sheet: np.ndarray | None = None, size: int = 480,
              xlabel: str = "x2", ylabel: str = "x3") -> str:
    """Render traced branches (and optionally a shadow-boundary sheet projection)."""
    canvas = SvgCanvas(window=curve.window, size=size)
    canvas.axes(xlabel, ylabel)
    if sheet is not None:
        for ray in sheet:
            canvas.polyline(ray[:, 1:3], color="#cccccc", width=0.6)
    for k, branch in enumerate(curve.branches):
        canvas.polyline(branch.vertices, color=_COLORS[k % len(_COLORS)])
    return canvas.render()
