"""Debug drawing of a detection on top of its frame."""

from __future__ import annotations

import math

import numpy as np

from .imaging import GrayImage

ROI_COLOR = (60, 120, 255)
SEGMENT_COLOR = (150, 150, 60)
CORNER_COLOR = (255, 40, 40)
PUPIL_COLOR = (40, 255, 40)
ARC_COLORS = ((255, 160, 0), (0, 220, 220), (230, 0, 230), (255, 255, 0), (120, 80, 255), (255, 100, 150))


def _put(rgb, xs, ys, color):
    h, w = rgb.shape[:2]
    xs = np.asarray(xs, dtype=np.int64)
    ys = np.asarray(ys, dtype=np.int64)
    ok = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
    rgb[ys[ok], xs[ok]] = color


def _rect(rgb, x, y, w, h, color):
    xs = np.arange(x, x + w)
    ys = np.arange(y, y + h)
    _put(rgb, xs, np.full(len(xs), y), color)
    _put(rgb, xs, np.full(len(xs), y + h - 1), color)
    _put(rgb, np.full(len(ys), x), ys, color)
    _put(rgb, np.full(len(ys), x + w - 1), ys, color)


def draw_detection(img: GrayImage, result, trace=None) -> np.ndarray:
    """(h, w, 3) uint8 picture: ROI, edge segments, arcs, corners and the chosen ellipse."""
    rgb = np.repeat(img.pixels[:, :, None], 3, axis=2).copy()
    x, y, w, h = result.roi.rect
    _rect(rgb, x, y, w, h, ROI_COLOR)
    if trace is not None:
        ox, oy = trace.window[:2]
        for seg in trace.segments:
            _put(rgb, seg.pixels[:, 0] + ox, seg.pixels[:, 1] + oy, SEGMENT_COLOR)
        for k, arc in enumerate(trace.arcs):
            _put(rgb, arc.pixels[:, 0] + ox, arc.pixels[:, 1] + oy, ARC_COLORS[k % len(ARC_COLORS)])
        for c in trace.corners:
            _rect(rgb, c.x + ox - 2, c.y + oy - 2, 5, 5, CORNER_COLOR)
    if result.ellipse is not None:
        e = result.ellipse
        n = max(64, int(8 * math.pi * e.a))
        pts = np.floor(e.boundary(n) + 0.5)
        _put(rgb, pts[:, 0], pts[:, 1], PUPIL_COLOR)
    return rgb
