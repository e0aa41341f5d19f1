"""Corner splitting of edge segments and elliptical-arc fitting of the spans between corners."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .edges import EdgeSegment
from .errors import FitError
from .geometry import FitResult, fit_ellipse
from .imaging import GradientField


@dataclass(frozen=True)
class Corner:
    segment: int
    index: int
    x: int
    y: int


@dataclass(frozen=True, eq=False)
class EllipticalArc:
    pixels: np.ndarray
    fit: FitResult
    segment: int
    start: int  # chain index of the first pixel

    @property
    def span_length(self) -> int:
        return len(self.pixels)


def window_weights(w: int, sigma: float) -> np.ndarray:
    k = np.arange(1, w + 1, dtype=np.float64)
    return np.exp(-0.5 * (k / sigma) ** 2)


def turning_angles(seg: EdgeSegment, field: GradientField, w: int = 7, sigma: float = 3.0,
                   closed: bool = False) -> np.ndarray:
    """Per-pixel turning angle (radians) between the gradient directions before and after.

    Each side is a Gaussian-weighted mean of unit gradient vectors over the w
    neighbours on that side. Open chains get 0 where a window would run off
    the end; closed chains wrap around.
    """
    n = len(seg)
    xs, ys = seg.pixels[:, 0], seg.pixels[:, 1]
    gx = field.gx[ys, xs]
    gy = field.gy[ys, xs]
    m = np.hypot(gx, gy)
    nz = m > 0
    ux = np.where(nz, gx / np.where(nz, m, 1.0), 0.0)
    uy = np.where(nz, gy / np.where(nz, m, 1.0), 0.0)
    g = window_weights(w, sigma)
    if closed:
        ux = np.concatenate([ux[-w:], ux, ux[:w]])
        uy = np.concatenate([uy[-w:], uy, uy[:w]])
        lo = w
    else:
        lo = 0
    # before[i] = sum_k g[k-1] u[i-k]; after[i] = sum_k g[k-1] u[i+k]
    kern_b = np.concatenate([[0.0], g])          # correlates u[i-k]
    kern_a = np.concatenate([g[::-1], [0.0]])    # correlates u[i+k]
    bx = np.convolve(ux, kern_b, mode="full")[: len(ux)]
    by = np.convolve(uy, kern_b, mode="full")[: len(uy)]
    ax = np.convolve(ux, kern_a, mode="full")[w: w + len(ux)]
    ay = np.convolve(uy, kern_a, mode="full")[w: w + len(uy)]
    kappa = np.abs(np.arctan2(bx * ay - by * ax, bx * ax + by * ay))
    if closed:
        return kappa[lo: lo + n]
    out = np.zeros(n)
    if n >= 2 * w + 1:
        out[w: n - w] = kappa[w: n - w]
    return out


def detect_corners(seg: EdgeSegment, field: GradientField, w: int = 7, sigma: float = 3.0,
                   angle_deg: float = 30.0, closed: bool | None = None, max_gap: float = 15.0,
                   segment_index: int = 0) -> list:
    """Turning-angle maxima above ``angle_deg``, at least ``w`` chain pixels apart."""
    n = len(seg)
    if n < 2 * w + 1:
        return []
    if closed is None:
        closed = seg.closed_gap <= max_gap
    kappa = turning_angles(seg, field, w, sigma, closed)
    thr = math.radians(angle_deg)
    if closed:
        prev = np.roll(kappa, 1)
        nxt = np.roll(kappa, -1)
    else:
        prev = np.concatenate([[-1.0], kappa[:-1]])
        nxt = np.concatenate([kappa[1:], [-1.0]])
    peaks = np.flatnonzero((kappa > thr) & (kappa > prev) & (kappa >= nxt))
    order = sorted(peaks.tolist(), key=lambda i: (-kappa[i], i))
    kept = []
    for i in order:
        ok = True
        for j in kept:
            d = abs(i - j)
            if closed:
                d = min(d, n - d)
            if d <= w:
                ok = False
                break
        if ok:
            kept.append(i)
    kept.sort()
    return [Corner(segment_index, i, int(seg.pixels[i, 0]), int(seg.pixels[i, 1])) for i in kept]


def split_spans(n: int, corner_idx, closed: bool):
    """Chain index ranges between corners; the corner pixels belong to no span.

    Returns a list of index arrays (wrap-around spans of closed chains are
    contiguous modulo n).
    """
    c = sorted(corner_idx)
    if not c:
        return [np.arange(n)]
    spans = []
    if closed:
        for k in range(len(c)):
            a = c[k] + 1
            b = c[(k + 1) % len(c)] if k + 1 < len(c) else c[0] + n
            spans.append(np.arange(a, b) % n)
        # start the list with the span that does not wrap
        spans = spans[-1:] + spans[:-1] if len(spans) > 1 else spans
        return spans
    bounds = [-1] + c + [n]
    for a, b in zip(bounds[:-1], bounds[1:]):
        spans.append(np.arange(a + 1, b))
    return spans


def plausible(fit: FitResult, min_minor: float = 3.0, max_major: float = math.inf) -> bool:
    """Rejects the needle-thin or huge ellipses that least squares returns for straight runs."""
    return fit.ellipse.b >= min_minor and fit.ellipse.a <= max_major


def segment_arcs(seg: EdgeSegment, corners, segment_index: int, min_length: int = 25,
                 max_rmse: float = 2.0, max_gap: float = 15.0, min_minor: float = 3.0,
                 max_major: float = math.inf, whole_fit: FitResult | None = None) -> list:
    """Fitted spans of one segment. ``whole_fit``, if given, is the fit of the full chain."""
    closed = seg.closed_gap <= max_gap
    arcs = []
    for idx in split_spans(len(seg), [c.index for c in corners], closed):
        if len(idx) < min_length:
            continue
        pts = seg.pixels[idx]
        if whole_fit is not None and len(idx) == len(seg):
            # same points in the same order: the fit is already known
            fit = whole_fit
        else:
            try:
                fit = fit_ellipse(pts)
            except FitError:
                continue
        if fit.rmse <= max_rmse and plausible(fit, min_minor, max_major):
            arcs.append(EllipticalArc(pts, fit, segment_index, int(idx[0])))
    return arcs


def extract_arcs(segments, field: GradientField, stats, near_circular: int | None = None,
                 min_entropy: float = 2.0, min_length: int = 25, max_rmse: float = 2.0,
                 max_gap: float = 15.0, w: int = 7, sigma: float = 3.0, angle_deg: float = 30.0,
                 min_minor: float = 3.0, max_major: float = math.inf):
    """Arcs from the near-circular segment alone when given, else from every high-entropy segment.

    Returns (arcs, corners).
    """
    if near_circular is not None:
        chosen = [near_circular]
    else:
        chosen = [i for i, st in enumerate(stats) if st.entropy > min_entropy and st.length >= min_length]
    arcs, corners = [], []
    for i in chosen:
        seg = segments[i]
        cs = detect_corners(seg, field, w, sigma, angle_deg, max_gap=max_gap, segment_index=i)
        corners.extend(cs)
        arcs.extend(segment_arcs(seg, cs, i, min_length, max_rmse, max_gap, min_minor, max_major))
    return arcs, corners
