"""Gradient-direction entropy of edge segments and the near-circular screen."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .edges import EdgeSegment
from .errors import FitError
from .geometry import FitResult, fit_ellipse
from .imaging import N_DIRECTIONS, GradientField

MAX_ENTROPY = math.log2(N_DIRECTIONS)


@dataclass(frozen=True, eq=False)
class SegmentShapeStats:
    hist: np.ndarray  # counts per direction cell, flat pixels excluded
    entropy: float
    length: int
    closed_gap: float
    fit: FitResult | None = None

    @property
    def empty(self) -> bool:
        """True when every pixel of the segment was flat."""
        return int(self.hist.sum()) == 0


def histogram_entropy(hist) -> float:
    """Shannon entropy in bits of a count histogram; 0 log 0 is 0."""
    h = np.asarray(hist, dtype=np.float64)
    total = h.sum()
    if total <= 0:
        return 0.0
    p = h[h > 0] / total
    e = float(-(p * np.log2(p)).sum())
    return e if e > 0 else 0.0


def direction_histogram(dirs) -> np.ndarray:
    d = np.asarray(dirs, dtype=np.int64)
    return np.bincount(d[d >= 0], minlength=N_DIRECTIONS)[:N_DIRECTIONS]


def gradient_entropy(seg: EdgeSegment, field: GradientField) -> SegmentShapeStats:
    if len(seg) == 0:
        raise ValueError("empty segment")
    xs, ys = seg.pixels[:, 0], seg.pixels[:, 1]
    hist = direction_histogram(field.directions_at(xs, ys))
    return SegmentShapeStats(hist, histogram_entropy(hist), len(seg), seg.closed_gap)


def near_circular_index(segments, field: GradientField, stats=None, min_entropy: float = 2.8,
                        max_gap: float = 15.0, max_rmse: float = 2.0, min_length: int = 25):
    """(index, fit) of the closed, high-entropy segment with the smallest fit error, or None.

    Ties on rmse go to the longer segment, then to the lexicographically
    smaller first pixel.
    """
    if stats is None:
        stats = [gradient_entropy(s, field) for s in segments]
    best = None
    for i, (seg, st) in enumerate(zip(segments, stats)):
        if st.entropy < min_entropy or st.closed_gap > max_gap or st.length < min_length:
            continue
        try:
            fit = fit_ellipse(seg.pixels)
        except FitError:
            continue
        if fit.rmse > max_rmse:
            continue
        first = tuple(int(v) for v in seg.pixels[0])
        key = (fit.rmse, -len(seg), first)
        if best is None or key < best[0]:
            best = (key, i, fit)
    if best is None:
        return None
    return best[1], best[2]


def find_near_circular(segments, field: GradientField, **params):
    """(segment, fit) for the near-circular segment, or None."""
    found = near_circular_index(segments, field, **params)
    if found is None:
        return None
    return segments[found[0]], found[1]


def stats_table(stats) -> str:
    """Plain-text table of per-segment histograms, length and entropy."""
    lines = ["seg  length  gap     entropy  hist"]
    for i, st in enumerate(stats):
        hist = " ".join(f"{int(c):4d}" for c in st.hist)
        lines.append(f"{i:3d}  {st.length:6d}  {st.closed_gap:6.1f}  {st.entropy:7.4f}  {hist}")
    return "\n".join(lines) + "\n"
