"""Pupil boundary detection from elliptical arcs of edge segments.

The detector finds a pupil region with a Haar-like search, extracts
validated edge segments there, screens them by gradient-direction entropy
and either fits the one near-circular segment directly (fast path) or
groups elliptical arcs from all curved segments and keeps the cheapest
ellipse (full path).
"""

from .config import Config, load_config
from .errors import FitError, InvalidArgument, ParseError, PupilArcError, RoiError, SpecError
from .evaluation import EvalRecord, EvalReport, classify, f_measure, run_corpus
from .geometry import EllipseParams, FitResult, fit_ellipse, overlap_ratio
from .imaging import GrayImage, load_pgm, read_pgm, write_pgm
from .kernels import BACKEND
from .pipeline import DetectionResult, PupilCandidate, detect
from .synth import SceneSpec, preset, render

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Config", "DetectionResult", "EllipseParams", "EvalRecord", "EvalReport", "FitError",
    "FitResult", "GrayImage", "InvalidArgument", "ParseError", "PupilArcError", "PupilCandidate",
    "RoiError", "SceneSpec", "SpecError", "classify", "detect", "f_measure", "fit_ellipse",
    "load_config", "load_pgm", "overlap_ratio", "preset", "read_pgm", "render", "run_corpus",
    "write_pgm",
]
