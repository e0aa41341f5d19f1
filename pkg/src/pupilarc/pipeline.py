"""Arc-subset candidates, cost-based pupil selection and the per-frame detector."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass

import numpy as np

from . import arcs as arcmod
from .config import Config
from .edges import extract_edges
from .errors import FitError
from .geometry import EllipseParams, FitResult, eccentricity, fit_ellipse, perimeter
from .imaging import GrayImage, integral
from .roi import RoiResult, detect_roi, search_window
from .shape import gradient_entropy, near_circular_index

PUPIL = "pupil"
NO_PUPIL = "no_pupil"
FAST = "fast"
FULL = "full"
STAGES = ("roi", "edges", "entropy", "corners", "arcs", "selection")


def candidate_cost(rmse: float, ecc: float, phi: float) -> float:
    """rmse² · π^ecc / phi²; small for tight, round, well-supported fits."""
    return rmse * rmse * math.pi ** ecc / (phi * phi)


@dataclass(frozen=True)
class PupilCandidate:
    arc_ids: tuple
    fit: FitResult
    phi: float
    cost: float


def arc_subsets(n: int):
    """Bit masks 1 .. 2^n - 1 as tuples of indices, in increasing mask order."""
    for mask in range(1, 1 << n):
        yield tuple(i for i in range(n) if mask >> i & 1)


def cap_arcs(arcs, max_arcs: int = 10):
    """Keep the ``max_arcs`` longest arcs (stable on ties), preserving their original order."""
    if len(arcs) <= max_arcs:
        return list(arcs)
    order = sorted(range(len(arcs)), key=lambda i: (-arcs[i].span_length, i))[:max_arcs]
    return [arcs[i] for i in sorted(order)]


def generate_candidates(arcs, max_rmse: float = 3.0, max_arcs: int = 10,
                        min_minor: float = 3.0, max_major: float = math.inf) -> list:
    """Fit every non-empty subset of (at most ``max_arcs``) arcs; drop fits above ``max_rmse``."""
    arcs = cap_arcs(arcs, max_arcs)
    out = []
    for ids in arc_subsets(len(arcs)):
        if len(ids) == 1:
            fit = arcs[ids[0]].fit
            support = arcs[ids[0]].span_length
        else:
            pts = np.concatenate([arcs[i].pixels for i in ids])
            try:
                fit = fit_ellipse(pts)
            except FitError:
                continue
            support = len(pts)
        if not fit.rmse <= max_rmse or not arcmod.plausible(fit, min_minor, max_major):
            continue
        phi = support / perimeter(fit.ellipse)
        out.append(PupilCandidate(ids, fit, phi, candidate_cost(fit.rmse, eccentricity(fit.ellipse), phi)))
    return out


def _selection_key(c: PupilCandidate):
    return (c.cost, -c.phi, c.fit.rmse)


def select_pupil(candidates, threshold: float = 50.0):
    """(verdict, best candidate or None). Cost ties go to larger phi, then smaller rmse."""
    if not candidates:
        return NO_PUPIL, None
    best = min(candidates, key=_selection_key)
    if best.cost > threshold:
        return NO_PUPIL, best
    return PUPIL, best


@dataclass(frozen=True)
class DetectionResult:
    verdict: str
    ellipse: EllipseParams | None
    cost: float | None
    roi: RoiResult
    path: str
    timings_us: dict

    def __post_init__(self):
        if (self.verdict == PUPIL) != (self.ellipse is not None):
            raise ValueError("a pupil verdict needs an ellipse and vice versa")

    @property
    def total_us(self) -> int:
        return int(sum(self.timings_us.values()))

    def to_json(self) -> str:
        """Fixed field order; reals at six decimals."""
        return _encode(self.to_dict())

    def to_dict(self) -> dict:
        d = {"verdict": self.verdict}
        if self.ellipse is not None:
            d["ellipse"] = {k: _real(v) for k, v in self.ellipse.to_json().items()}
        if self.cost is not None and self.verdict == PUPIL:
            d["cost"] = _real(self.cost)
        d["roi"] = self.roi.to_json()
        d["path"] = self.path
        d["timings_us"] = {k: int(self.timings_us.get(k, 0)) for k in STAGES}
        return d


class Real(float):
    """A float that is written with exactly six decimals."""


def _real(v):
    return Real(v)


def _encode(obj):
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    if isinstance(obj, Real):
        text = f"{float(obj):.6f}"
        return "0.000000" if text == "-0.000000" else text
    return json.dumps(obj)


def encode_json(obj) -> str:
    """json text where :class:`Real` values carry six decimals."""
    return _encode(obj)


@dataclass
class FrameTrace:
    """Intermediate products of one detection, for overlays and debugging."""

    roi: RoiResult
    window: tuple
    field: object
    segments: list
    stats: list
    near_circular: int | None
    corners: list
    arcs: list
    candidates: list
    best: PupilCandidate | None


def detect(img: GrayImage, cfg: Config | None = None, trace: bool = False):
    """Detect the pupil in one frame; returns a DetectionResult (and a FrameTrace if asked)."""
    cfg = cfg or Config()
    clock = time.perf_counter_ns
    t = {}

    t0 = clock()
    roi = detect_roi(img, cfg.roi_scales, cfg.roi_stride, integral(img))
    wx, wy, ww, wh = search_window(roi, img.width, img.height, cfg.roi_expand)
    sub = img.crop(wx, wy, ww, wh)
    # a pupil cannot be larger than the window it was found in
    max_major = float(max(ww, wh))
    t1 = clock()
    t["roi"] = t1 - t0

    field, segments = extract_edges(sub, cfg.smooth_sigma, cfg.edge_threshold,
                                    cfg.scan_interval, cfg.min_segment_length)
    t2 = clock()
    t["edges"] = t2 - t1

    stats = [gradient_entropy(s, field) for s in segments]
    found = near_circular_index(segments, field, stats, cfg.near_circular_entropy, cfg.closed_gap,
                                cfg.near_circular_rmse, cfg.arc_min_length)
    t3 = clock()
    t["entropy"] = t3 - t2

    if found is not None:
        path = FAST
        chosen = [found[0]]
    else:
        path = FULL
        chosen = [i for i, st in enumerate(stats)
                  if st.entropy > cfg.arc_entropy and st.length >= cfg.arc_min_length]
    corners = {}
    for i in chosen:
        corners[i] = arcmod.detect_corners(segments[i], field, cfg.css_window, cfg.css_sigma,
                                           cfg.corner_angle_deg, max_gap=cfg.closed_gap, segment_index=i)
    t4 = clock()
    t["corners"] = t4 - t3

    arcs = []
    for i in chosen:
        whole = found[1] if found is not None else None
        arcs.extend(arcmod.segment_arcs(segments[i], corners[i], i, cfg.arc_min_length,
                                        cfg.arc_rmse, cfg.closed_gap, cfg.min_minor_axis, max_major,
                                        whole_fit=whole))
    t5 = clock()
    t["arcs"] = t5 - t4

    candidates = generate_candidates(arcs, cfg.candidate_rmse, cfg.max_arcs,
                                     cfg.min_minor_axis, max_major) if arcs else []
    verdict, best = select_pupil(candidates, cfg.cost_threshold)
    t6 = clock()
    t["selection"] = t6 - t5

    ellipse = best.fit.ellipse.translated(wx, wy) if verdict == PUPIL else None
    cost = best.cost if verdict == PUPIL else None
    timings = {k: (v // 1000 if cfg.timings else 0) for k, v in t.items()}
    result = DetectionResult(verdict, ellipse, cost, roi, path, timings)
    if not trace:
        return result
    all_corners = [c for i in chosen for c in corners[i]]
    return result, FrameTrace(roi, (wx, wy, ww, wh), field, segments, stats,
                              None if found is None else found[0], all_corners, arcs, candidates, best)
