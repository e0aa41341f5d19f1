"""Overlap-based scoring of detections, precision/recall/F and corpus reports."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import Config
from .geometry import EllipseParams, overlap_ratio
from .pipeline import FAST, NO_PUPIL, PUPIL, Real, detect, encode_json
from .synth import BLINK, CLEAN, OCCLUDED, render

TP, FP, TN, FN = "TP", "FP", "TN", "FN"
OUTCOMES = (TP, FP, TN, FN)
GT_CLASSES = (CLEAN, OCCLUDED, BLINK)
CSV_COLUMNS = ("frame_id", "gt_class", "verdict", "or", "eps_o", "class", "path", "total_us")
SWEEP = tuple(round(0.01 * i, 2) for i in range(21))


def overlap_error(overlap: float) -> float:
    return 1.0 - overlap


def outcome(has_gt: bool, verdict: str, eps_o: float | None, eps_threshold: float) -> str:
    """Confusion class of one frame.

    A detection counts as TP only when a pupil exists and the overlap error is
    within ``eps_threshold``; a poor detection is a FP, a missed pupil a FN.
    """
    if verdict not in (PUPIL, NO_PUPIL):
        raise ValueError(f"unknown verdict {verdict!r}")
    if not has_gt:
        return TN if verdict == NO_PUPIL else FP
    if verdict == NO_PUPIL:
        return FN
    return TP if eps_o <= eps_threshold else FP


def classify(det, gt: EllipseParams | None, eps_threshold: float, canvas) -> str:
    """Outcome of a DetectionResult against the ground truth on a (width, height) canvas."""
    eps = None
    if gt is not None and det.verdict == PUPIL:
        eps = overlap_error(overlap_ratio(gt, det.ellipse, canvas))
    return outcome(gt is not None, det.verdict, eps, eps_threshold)


def f_measure(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def precision_recall(counts: dict):
    """(P, R) from outcome counts; an empty denominator gives 0."""
    tp, fp, fn = counts[TP], counts[FP], counts[FN]
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return p, r


@dataclass(frozen=True)
class EvalRecord:
    frame_id: str
    gt_class: str
    has_gt: bool
    verdict: str
    overlap: float | None  # None when there is nothing to compare
    path: str
    total_us: int

    @property
    def eps_o(self) -> float | None:
        return None if self.overlap is None else overlap_error(self.overlap)

    def outcome(self, eps_threshold: float) -> str:
        return outcome(self.has_gt, self.verdict, self.eps_o, eps_threshold)


def score_frame(det, gt: EllipseParams | None, gt_class: str, frame_id: str, canvas) -> EvalRecord:
    if gt is None:
        ov = None
    elif det.verdict == PUPIL:
        ov = overlap_ratio(gt, det.ellipse, canvas)
    else:
        ov = 0.0
    return EvalRecord(frame_id, gt_class, gt is not None, det.verdict, ov, det.path, det.total_us)


class EvalReport:
    """Per-frame records plus the config they were produced with."""

    def __init__(self, records, cfg: Config):
        self.records = list(records)
        self.config = cfg

    @property
    def eps_threshold(self) -> float:
        return self.config.eps_threshold

    def counts(self, eps_threshold: float | None = None, gt_class: str | None = None) -> dict:
        thr = self.eps_threshold if eps_threshold is None else eps_threshold
        out = dict.fromkeys(OUTCOMES, 0)
        for r in self.records:
            if gt_class is None or r.gt_class == gt_class:
                out[r.outcome(thr)] += 1
        return out

    def scores(self, eps_threshold: float | None = None):
        """(precision, recall, F)."""
        p, r = precision_recall(self.counts(eps_threshold))
        return p, r, f_measure(p, r)

    def mean_overlap(self, gt_class: str | None = None) -> float | None:
        """Mean OR over frames with a pupil that was detected."""
        ors = [r.overlap for r in self.records
               if r.has_gt and r.verdict == PUPIL and (gt_class is None or r.gt_class == gt_class)]
        return float(np.mean(ors)) if ors else None

    def sweep(self, thresholds=SWEEP) -> list:
        rows = []
        for t in thresholds:
            p, r, f = self.scores(t)
            rows.append({"eps_o": Real(t), "precision": Real(p), "recall": Real(r), "f_measure": Real(f)})
        return rows

    def class_summary(self, gt_class: str) -> dict:
        rs = [r for r in self.records if r.gt_class == gt_class]
        mean_or = self.mean_overlap(gt_class)
        return {
            "frames": len(rs),
            "counts": self.counts(gt_class=gt_class),
            "fast_path": sum(r.path == FAST for r in rs),
            "mean_or": None if mean_or is None else Real(mean_or),
            "mean_total_us": Real(np.mean([r.total_us for r in rs])) if rs else None,
        }

    def to_dict(self) -> dict:
        p, r, f = self.scores()
        mean_or = self.mean_overlap()
        return {
            "frames": len(self.records),
            "eps_threshold": Real(self.eps_threshold),
            "counts": self.counts(),
            "precision": Real(p),
            "recall": Real(r),
            "f_measure": Real(f),
            "mean_or": None if mean_or is None else Real(mean_or),
            "by_class": {c: self.class_summary(c) for c in GT_CLASSES},
            "sweep": self.sweep(),
            "config": self.config.to_json(),
        }

    def to_json(self) -> str:
        return encode_json(self.to_dict()) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        thr = self.eps_threshold
        for r in self.records:
            ov = "" if r.overlap is None else f"{r.overlap:.6f}"
            eps = "" if r.eps_o is None else f"{r.eps_o:.6f}"
            w.writerow([r.frame_id, r.gt_class, r.verdict, ov, eps, r.outcome(thr), r.path, r.total_us])
        return buf.getvalue()


def _eval_spec(args):
    spec, cfg = args
    img, gt = render(spec)
    det = detect(img, cfg)
    return score_frame(det, gt, spec.gt_class, spec.frame_id, (img.width, img.height))


def _eval_image(args):
    img, gt, gt_class, frame_id, cfg = args
    det = detect(img, cfg)
    return score_frame(det, gt, gt_class, frame_id, (img.width, img.height))


def _map(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map keeps input order, so the report does not depend on scheduling
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def run_corpus(specs, cfg: Config | None = None, jobs: int = 1) -> EvalReport:
    """Render, detect and score every scene."""
    cfg = cfg or Config()
    return EvalReport(_map(_eval_spec, [(s, cfg) for s in specs], jobs), cfg)


def evaluate_images(frames, cfg: Config | None = None, jobs: int = 1) -> EvalReport:
    """``frames`` holds (GrayImage, gt ellipse or None, gt_class, frame_id) tuples."""
    cfg = cfg or Config()
    return EvalReport(_map(_eval_image, [tuple(f) + (cfg,) for f in frames], jobs), cfg)
