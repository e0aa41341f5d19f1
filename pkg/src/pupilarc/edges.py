"""Anchor-and-route edge chains with a-contrario pruning."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .imaging import GradientField, GrayImage, compute_gradients, gaussian_smooth

N_TAIL_BINS = 256


@dataclass(frozen=True, eq=False)
class EdgeSegment:
    """An ordered 8-connected chain; ``pixels`` is an (n, 2) int32 array of (x, y)."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(self.pixels, dtype=np.int32).reshape(-1, 2)
        p.flags.writeable = False
        object.__setattr__(self, "pixels", p)

    def __len__(self):
        return len(self.pixels)

    @property
    def closed_gap(self) -> float:
        d = self.pixels[-1].astype(np.float64) - self.pixels[0]
        return float(math.hypot(d[0], d[1]))

    def translated(self, dx: int, dy: int) -> "EdgeSegment":
        return EdgeSegment(self.pixels + np.array([dx, dy], dtype=np.int32))

    def __eq__(self, other):
        if not isinstance(other, EdgeSegment):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    __hash__ = None


class MagnitudeTail:
    """Empirical P(mag >= mu) from a log-spaced histogram of the field.

    The tail is read at the lower edge of mu's bin, so it never underestimates.
    """

    def __init__(self, mag: np.ndarray, bins: int = N_TAIL_BINS):
        m = np.asarray(mag, dtype=np.float64).ravel()
        self.n = m.size
        hi = max(float(m.max()) if m.size else 1.0, 1.0)
        self.edges = np.geomspace(1.0, hi * (1 + 1e-9), bins + 1)
        counts, _ = np.histogram(m[m >= 1.0], bins=self.edges)
        tail = np.cumsum(counts[::-1])[::-1]
        self.tail = tail / max(self.n, 1)

    def __call__(self, mu: float) -> float:
        k = int(np.searchsorted(self.edges, mu, side="right")) - 1
        if k < 0:
            return 1.0
        k = min(k, len(self.tail) - 1)
        return float(self.tail[k])


def log10_nfa(length: int, mu_min: float, n_pixels: int, tail: MagnitudeTail) -> float:
    """log10 of n_pixels² · H(mu_min)^length."""
    h = tail(mu_min)
    if h <= 0:
        return -math.inf
    return 2.0 * math.log10(max(n_pixels, 1)) + length * math.log10(h)


def validate_segment(seg: EdgeSegment, field: GradientField, n_pixels: int, tail: MagnitudeTail | None = None) -> bool:
    """True when the chain's expected number of false alarms is at most 1."""
    if len(seg) == 0:
        raise ValueError("empty segment")
    if tail is None:
        tail = MagnitudeTail(field.mag)
    xs, ys = seg.pixels[:, 0], seg.pixels[:, 1]
    mu = float(field.mag[ys, xs].min())
    return log10_nfa(len(seg), mu, n_pixels, tail) <= 0.0


def find_anchors(field: GradientField, threshold: float = 8.0, scan_interval: int = 2):
    """Ridge pixels across the edge, sampled along the edge every ``scan_interval`` pixels.

    Returns (anchors (k, 2) of (y, x) in processing order, horizontal-edge mask).
    """
    mag = field.mag
    h, w = mag.shape
    horizontal = np.abs(field.gx) < np.abs(field.gy)
    anchors = np.zeros((h, w), dtype=bool)
    if h < 3 or w < 3:
        return np.empty((0, 2), dtype=np.int64), horizontal
    c = mag[1:-1, 1:-1]
    ridge_h = (c > mag[:-2, 1:-1]) & (c >= mag[2:, 1:-1])
    ridge_v = (c > mag[1:-1, :-2]) & (c >= mag[1:-1, 2:])
    hz = horizontal[1:-1, 1:-1]
    on_grid_h = (np.arange(1, w - 1) % scan_interval == 0)[None, :]
    on_grid_v = (np.arange(1, h - 1) % scan_interval == 0)[:, None]
    anchors[1:-1, 1:-1] = (c >= threshold) & ((hz & ridge_h & on_grid_h) | (~hz & ridge_v & on_grid_v))
    ys, xs = np.nonzero(anchors)
    order = np.lexsort((xs, ys, -mag[ys, xs]))
    return np.column_stack([ys[order], xs[order]]).astype(np.int64), horizontal


def _valid_pieces(pts, mags, n_pixels, tail, min_length):
    """Keep the chain if meaningful, else split at its weakest pixel and retry each side."""
    out = []
    stack = [(0, len(pts))]
    while stack:
        i, j = stack.pop()
        if j - i < min_length:
            continue
        piece = mags[i:j]
        k = int(np.argmin(piece))
        if log10_nfa(j - i, float(piece[k]), n_pixels, tail) <= 0.0:
            out.append((i, j))
        else:
            # right half pushed first so pieces come out in chain order
            stack.append((i + k + 1, j))
            stack.append((i, i + k))
    out.sort()
    return [pts[i:j] for i, j in out]


def extract_edges(img: GrayImage, sigma: float = 1.0, threshold: float = 8.0,
                  scan_interval: int = 2, min_length: int = 10):
    """Gradient field of the smoothed image and its validated edge segments."""
    field = compute_gradients(gaussian_smooth(img, sigma))
    anchors, horizontal = find_anchors(field, threshold, scan_interval)
    chains = kernels.route_edges(field.mag, horizontal.astype(np.uint8), anchors, threshold)
    n_pixels = img.width * img.height
    tail = MagnitudeTail(field.mag)
    segments = []
    for chain in chains:
        if len(chain) < min_length:
            continue
        chain = kernels.thin_chain(chain)
        if len(chain) < min_length:
            continue
        mags = field.mag[chain[:, 1], chain[:, 0]]
        for piece in _valid_pieces(chain, mags, n_pixels, tail, min_length):
            segments.append(EdgeSegment(piece))
    return field, segments


def detect_segments(roi_img: GrayImage, **params) -> list:
    return extract_edges(roi_img, **params)[1]


def segments_to_json(segments) -> str:
    return json.dumps([seg.pixels.tolist() for seg in segments], separators=(",", ":"))


def segments_from_json(text: str) -> list:
    return [EdgeSegment(np.asarray(p, dtype=np.int32).reshape(-1, 2)) for p in json.loads(text)]
