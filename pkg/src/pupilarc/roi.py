"""Pupil region estimate from a multi-scale square centre-surround Haar feature."""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import kernels
from .errors import RoiError
from .imaging import GrayImage, IntegralImage, box_sum, integral

DEFAULT_SCALES = (150, 200, 250, 300, 350)
INNER_RATIO = 3 / 5


@dataclass(frozen=True)
class RoiResult:
    rect: tuple  # (x, y, w, h) of the winning outer window
    aperture: int
    score: float

    @property
    def center(self):
        x, y, w, h = self.rect
        return x + w // 2, y + h // 2

    def to_json(self) -> dict:
        x, y, w, h = self.rect
        return {"x": x, "y": y, "w": w, "h": h}


def inner_side(aperture: int) -> int:
    return int(math.floor(aperture * INNER_RATIO + 0.5))


def haar_response(ii: IntegralImage, center, aperture: int):
    """Ring mean minus inner mean for the window centred at ``center``.

    Returns None when the outer square does not fit inside the image.
    """
    cx, cy = int(center[0]), int(center[1])
    s = inner_side(aperture)
    x0, y0 = cx - aperture // 2, cy - aperture // 2
    if x0 < 0 or y0 < 0 or x0 + aperture > ii.width or y0 + aperture > ii.height:
        return None
    outer = box_sum(ii, (x0, y0, aperture, aperture))
    inner = box_sum(ii, (cx - s // 2, cy - s // 2, s, s))
    a_in = s * s
    a_ring = aperture * aperture - a_in
    return (outer - inner) / a_ring - inner / a_in


def _rank(score, x0, y0, aperture):
    # larger score first; ties go to the smallest (centre y, centre x, aperture)
    return (-score, y0 + aperture // 2, x0 + aperture // 2, aperture)


def detect_roi(img: GrayImage, scales=DEFAULT_SCALES, stride: int = 4, ii: IntegralImage | None = None) -> RoiResult:
    """Best-responding window over all scales, equal to an exhaustive 1 px scan.

    A scan at ``stride`` gives a lower bound on the best response. Each
    stride x stride block of window positions is then visited at 1 px only
    when an upper bound on its responses reaches that bound.
    """
    if not scales:
        raise RoiError("no scales given")
    if ii is None:
        ii = integral(img)
    sat = ii.sat
    w, h = img.width, img.height
    aps = [ap for ap in sorted(set(int(s) for s in scales)) if 2 <= ap <= min(w, h)]
    if not aps:
        raise RoiError(f"no aperture in {tuple(scales)} fits a {w}x{h} image")
    coarse = {ap: kernels.haar_best(sat, ap, inner_side(ap), 0, h - ap, 0, w - ap, stride) for ap in aps}
    # polishing the coarse winner raises the bound and prunes more blocks
    top = max(aps, key=lambda ap: (coarse[ap][0], -ap))
    _, cy0, cx0 = coarse[top]
    floor = kernels.haar_best(sat, top, inner_side(top), max(0, cy0 - stride), min(h - top, cy0 + stride),
                              max(0, cx0 - stride), min(w - top, cx0 + stride), 1)[0]
    best = None
    for ap in aps:
        if stride > 1:
            score, y0, x0 = kernels.haar_blocks(sat, ap, inner_side(ap), 0, h - ap, 0, w - ap, stride, floor)
            if y0 < 0:
                continue
        else:
            score, y0, x0 = coarse[ap]
        key = _rank(score, x0, y0, ap)
        if best is None or key < best[0]:
            best = (key, RoiResult((x0, y0, ap, ap), ap, score))
    return best[1]


def search_window(roi: RoiResult, width: int, height: int, expand: float = 0.10):
    """The winning window grown by ``expand`` (fraction of its side) and clamped to the image."""
    x, y, w, h = roi.rect
    grow = int(math.floor(w * expand / 2 + 0.5))
    x0 = max(0, x - grow)
    y0 = max(0, y - grow)
    x1 = min(width, x + w + grow)
    y1 = min(height, y + h + grow)
    return x0, y0, x1 - x0, y1 - y0
