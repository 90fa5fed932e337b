"""Poincare-disk figures as plain SVG 1.1."""

from __future__ import annotations

from xml.sax.saxutils import quoteattr

import numpy as np

from . import geometry as geo

_PALETTE = ["#2166ac", "#e66101", "#1a9641", "#d7191c", "#7b3294", "#008080"]
_GRAYS = ["#000000", "#404040", "#606060", "#808080", "#999999", "#b0b0b0", "#202020", "#707070"]


class DiskFigure:
    """Accumulates layers and renders a square SVG of the unit disk."""

    def __init__(self, size=600, margin=10):
        self.size = size
        self.margin = margin
        self._items = []

    def _xy(self, b):
        r = (self.size - 2 * self.margin) / 2.0
        c = self.size / 2.0
        b = np.atleast_2d(b)
        # SVG y grows downward
        return np.column_stack([c + r * b[:, 0], c - r * b[:, 1]])

    def points(self, pts, labels=None, radius=2.5, cls="data"):
        """Data markers; ``pts`` are hyperboloid points."""
        xy = self._xy(geo.to_ball(pts))
        cats = sorted(set(labels)) if labels is not None else []
        for i, (x, y) in enumerate(xy):
            fill = _GRAYS[cats.index(labels[i]) % len(_GRAYS)] if labels is not None else "#000000"
            self._items.append(f'<circle class="{cls}" cx="{x:.3f}" cy="{y:.3f}" r="{radius}" fill="{fill}"/>')

    def polygon(self, pts, color=None, cls="contour", vertices=True, label=None):
        """Closed polyline through hyperboloid points, optionally with vertex markers."""
        color = color or _PALETTE[len(self._items) % len(_PALETTE)]
        xy = self._xy(geo.to_ball(pts))
        coords = " ".join(f"{x:.3f},{y:.3f}" for x, y in xy)
        title = f"<title>{label}</title>" if label else ""
        self._items.append(f'<polygon class="{cls}" points="{coords}" fill="none" stroke="{color}" '
                           f'stroke-width="1.5">{title}</polygon>')
        if vertices:
            for x, y in xy:
                self._items.append(f'<circle class="vertex" cx="{x:.3f}" cy="{y:.3f}" r="2" fill="{color}"/>')

    def marker(self, p, color="#2166ac", cls="median"):
        (x, y), = self._xy(geo.to_ball(p))
        self._items.append(f'<rect class="{cls}" x="{x - 4:.3f}" y="{y - 4:.3f}" width="8" height="8" '
                           f'fill="{color}"/>')

    def render(self, title=None):
        s = self.size
        r = (s - 2 * self.margin) / 2.0
        parts = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{s}" height="{s}" '
            f'viewBox="0 0 {s} {s}">',
        ]
        if title:
            parts.append(f"<title>{title}</title>")
        parts.append(f'<circle class="disk" cx="{s / 2}" cy="{s / 2}" r="{r}" fill="none" stroke="#000000"/>')
        parts.extend(self._items)
        parts.append("</svg>")
        return "\n".join(parts) + "\n"


def contour_figure(data_points, contours, median=None, labels=None, extra=(), size=600):
    """Data, one closed polygon per contour with beta > 0, and a median marker.

    ``contours`` is a list of ``(beta, points)``; a beta = 0 contour is drawn
    as a single median marker. ``extra`` holds ``(name, points, color)``
    polylines drawn without vertex markers (e.g. outlier fences).
    """
    fig = DiskFigure(size)
    fig.points(data_points, labels)
    for i, (beta, pts) in enumerate(contours):
        if beta == 0:
            median = pts[0] if median is None else median
            continue
        fig.polygon(pts, _PALETTE[i % len(_PALETTE)], label=quoteattr(f"beta={beta}")[1:-1])
    for name, pts, color in extra:
        fig.polygon(pts, color, cls=name, vertices=False)
    if median is not None:
        fig.marker(median)
    return fig.render()
