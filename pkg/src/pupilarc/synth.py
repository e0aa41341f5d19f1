"""Synthetic eye frames with exact ground truth."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, SpecError
from .geometry import EllipseParams, rasterize
from .imaging import GrayImage

CLEAN = "clean"
OCCLUDED = "occluded"
BLINK = "blink"


@dataclass(frozen=True)
class SceneSpec:
    """One frame: sclera, iris disk, optional pupil, an eyelid half-plane, glints and noise.

    ``occlusion`` is the fraction of the pupil boundary (or of the iris
    boundary when there is no pupil) hidden under the lid. The lid edge is
    perpendicular to ``lid_angle``, the direction from the eye towards the lid.
    At occlusion 0 the lid stops ``lid_margin`` px short of the boundary; at 1
    it reaches ``lid_margin`` px past it.
    """

    pupil: EllipseParams | None
    iris_center: tuple
    iris_radius: float
    width: int = 1280
    height: int = 720
    pupil_level: int = 30
    iris_level: int = 110
    sclera_level: int = 200
    skin_level: int = 170
    lash_level: int = 30
    lash_width: float = 6.0
    occlusion: float = 0.0
    lid: bool = True
    lid_angle: float = -math.pi / 2
    lid_margin: float = 20.0
    glint_count: int = 0
    glint_radius: float = 3.0
    glint_level: int = 250
    lash_strokes: int = 0
    lash_length: float = 30.0
    noise_sigma: float = 0.0
    seed: int = 0
    frame_id: str = ""

    def __post_init__(self):
        if not 0.0 <= self.occlusion <= 1.0:
            raise SpecError(f"occlusion {self.occlusion} outside [0, 1]")
        if not self.pupil_level < self.iris_level < self.sclera_level:
            raise SpecError("intensities must satisfy pupil < iris < sclera")
        for name in ("pupil_level", "iris_level", "sclera_level", "skin_level", "lash_level", "glint_level"):
            if not 0 <= getattr(self, name) <= 255:
                raise SpecError(f"{name} outside 0..255")
        if self.width < 8 or self.height < 8:
            raise SpecError("frame too small")
        if not self.iris_radius > 0:
            raise SpecError("iris radius must be positive")
        if self.noise_sigma < 0 or self.glint_count < 0 or self.lash_strokes < 0 or self.glint_radius <= 0 or self.lash_width < 0 \
                or self.lash_length <= 0:
            raise SpecError("noise, glint and lash parameters must be non-negative")
        if self.pupil is not None:
            pts = self.pupil.boundary(720)
            r = np.hypot(pts[:, 0] - self.iris_center[0], pts[:, 1] - self.iris_center[1])
            if r.max() > self.iris_radius:
                raise SpecError("pupil is not inside the iris")

    @property
    def gt_class(self) -> str:
        # a pupil counts only while more than half of its rim is visible
        if self.pupil is None or self.occlusion >= 0.5:
            return BLINK
        return OCCLUDED if self.occlusion > 0 else CLEAN

    @property
    def ground_truth(self) -> EllipseParams | None:
        return None if self.gt_class == BLINK else self.pupil

    def to_json(self) -> dict:
        d = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name == "pupil" and v is not None:
                # radians, so a spec read back renders the same pixels
                v = {"cx": v.cx, "cy": v.cy, "a": v.a, "b": v.b, "theta": v.theta}
            elif f.name == "iris_center":
                v = [float(v[0]), float(v[1])]
            d[f.name] = v
        return d

    @classmethod
    def from_json(cls, d: dict) -> "SceneSpec":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise SpecError(f"unknown scene fields: {sorted(unknown)}")
        kw = dict(d)
        try:
            p = kw.get("pupil")
            if p is not None:
                theta = p["theta"] if "theta" in p else math.radians(p["theta_deg"])
                kw["pupil"] = EllipseParams.make(p["cx"], p["cy"], p["a"], p["b"], theta)
            kw["iris_center"] = tuple(float(v) for v in kw["iris_center"])
            return cls(**kw)
        except (KeyError, TypeError, InvalidArgument) as exc:
            raise SpecError(f"bad scene spec: {exc}") from None


def boundary_pixels(mask: np.ndarray) -> np.ndarray:
    """(n, 2) (x, y) of mask pixels with a 4-neighbour outside the mask."""
    m = np.pad(mask, 1)
    inner = m[1:-1, 1:-1] & m[:-2, 1:-1] & m[2:, 1:-1] & m[1:-1, :-2] & m[1:-1, 2:]
    ys, xs = np.nonzero(mask & ~inner)
    return np.column_stack([xs, ys])


def _disk(cx, cy, r, width, height):
    return rasterize(EllipseParams(float(cx), float(cy), float(r), float(r), 0.0), width, height)


def lid_offset(spec: SceneSpec, target_mask: np.ndarray) -> float:
    """Signed distance of the lid edge from the target centre along the lid normal.

    Chosen so that the covered share of the target's boundary pixels matches
    ``spec.occlusion`` as closely as the raster allows.
    """
    nx, ny = math.cos(spec.lid_angle), math.sin(spec.lid_angle)
    b = boundary_pixels(target_mask)
    if len(b) == 0:
        return math.inf
    cx, cy = b[:, 0].mean(), b[:, 1].mean()
    proj = np.sort((b[:, 0] - cx) * nx + (b[:, 1] - cy) * ny)[::-1]
    n = len(proj)
    k = int(math.floor(spec.occlusion * n + 0.5))
    if k <= 0:
        s = proj[0] + spec.lid_margin
    elif k >= n:
        s = proj[-1] - spec.lid_margin
    else:
        s = 0.5 * (proj[k - 1] + proj[k])
    return float(s + cx * nx + cy * ny)


def lid_masks(spec: SceneSpec, offset: float):
    """(covered, lash band) masks for the lid edge at ``offset`` along the lid normal."""
    nx, ny = math.cos(spec.lid_angle), math.sin(spec.lid_angle)
    xs = np.arange(spec.width, dtype=np.float64)
    ys = np.arange(spec.height, dtype=np.float64)[:, None]
    proj = xs * nx + ys * ny
    covered = proj >= offset
    band = covered & (proj < offset + spec.lash_width)
    return covered, band


def render(spec: SceneSpec):
    """Rasterize the scene; returns (GrayImage, ground-truth ellipse or None)."""
    w, h = spec.width, spec.height
    canvas = np.full((h, w), float(spec.sclera_level))
    iris = _disk(spec.iris_center[0], spec.iris_center[1], spec.iris_radius, w, h)
    canvas[iris] = spec.iris_level
    rng = np.random.default_rng(spec.seed)
    if spec.pupil is not None:
        pupil = rasterize(spec.pupil, w, h)
        canvas[pupil] = spec.pupil_level
        for gx, gy in _glint_centres(spec, rng):
            canvas[_disk(gx, gy, spec.glint_radius, w, h)] = spec.glint_level
        target = pupil
    else:
        target = iris
    if spec.lid:
        offset = lid_offset(spec, target)
        covered, band = lid_masks(spec, offset)
        canvas[covered] = spec.skin_level
        canvas[band] = spec.lash_level
        for seg in _lash_strokes(spec, offset, rng):
            canvas[_stroke_mask(seg, w, h)] = spec.lash_level
    if spec.noise_sigma > 0:
        canvas += rng.normal(0.0, spec.noise_sigma, canvas.shape)
    out = np.clip(np.floor(canvas + 0.5), 0, 255).astype(np.uint8)
    return GrayImage(out), spec.ground_truth


def _glint_centres(spec: SceneSpec, rng):
    """Glints sit well inside the pupil so they never touch its rim."""
    e = spec.pupil
    reach = max(0.0, 0.55 * e.b - spec.glint_radius - 2)
    out = []
    for _ in range(spec.glint_count):
        r = reach * math.sqrt(rng.random())
        t = 2 * math.pi * rng.random()
        out.append((e.cx + r * math.cos(t), e.cy + r * math.sin(t)))
    return out


def _lash_strokes(spec: SceneSpec, offset: float, rng):
    """Short dark strokes hanging off the lid edge into the open side."""
    nx, ny = math.cos(spec.lid_angle), math.sin(spec.lid_angle)
    cx, cy = spec.iris_center
    # foot of the eye centre on the lid edge, then spread along the edge
    d = offset - (cx * nx + cy * ny)
    fx, fy = cx + d * nx, cy + d * ny
    out = []
    for _ in range(spec.lash_strokes):
        t = rng.uniform(-1.2, 1.2) * spec.iris_radius
        length = rng.uniform(spec.lash_length / 3, spec.lash_length)
        tilt = rng.uniform(-0.6, 0.6)
        x0, y0 = fx - t * ny, fy + t * nx
        ang = math.atan2(-ny, -nx) + tilt
        out.append((x0, y0, x0 + length * math.cos(ang), y0 + length * math.sin(ang)))
    return out


def _stroke_mask(seg, width, height, half_width: float = 1.0):
    x0, y0, x1, y1 = seg
    mask = np.zeros((height, width), dtype=bool)
    bx0 = max(int(math.floor(min(x0, x1) - 2)), 0)
    by0 = max(int(math.floor(min(y0, y1) - 2)), 0)
    bx1 = min(int(math.ceil(max(x0, x1) + 2)), width - 1)
    by1 = min(int(math.ceil(max(y0, y1) + 2)), height - 1)
    if bx0 > bx1 or by0 > by1:
        return mask
    xs = np.arange(bx0, bx1 + 1, dtype=np.float64)
    ys = np.arange(by0, by1 + 1, dtype=np.float64)[:, None]
    dx, dy = x1 - x0, y1 - y0
    t = np.clip(((xs - x0) * dx + (ys - y0) * dy) / (dx * dx + dy * dy), 0.0, 1.0)
    dist = np.hypot(xs - (x0 + t * dx), ys - (y0 + t * dy))
    mask[by0:by1 + 1, bx0:bx1 + 1] = dist <= half_width
    return mask


def covered_fraction(spec: SceneSpec) -> float:
    """Share of the target's rasterized boundary pixels under the lid (including the lash band)."""
    w, h = spec.width, spec.height
    if spec.pupil is not None:
        target = rasterize(spec.pupil, w, h)
    else:
        target = _disk(spec.iris_center[0], spec.iris_center[1], spec.iris_radius, w, h)
    b = boundary_pixels(target)
    if not spec.lid or len(b) == 0:
        return 0.0
    covered, _ = lid_masks(spec, lid_offset(spec, target))
    return float(covered[b[:, 1], b[:, 0]].mean())


# ------------------------------------------------------------------- presets


def _eye(rng, width, height, occlusion, kind, index, seed):
    a = rng.uniform(40.0, 90.0)
    b = a * rng.uniform(0.85, 1.0)
    theta = rng.uniform(0.0, math.pi)
    cx = rng.uniform(0.3 * width, 0.7 * width)
    cy = rng.uniform(0.36 * height, 0.64 * height)
    iris_r = rng.uniform(220.0, 280.0)
    off = rng.uniform(-0.1, 0.1, size=2) * a
    lower = rng.random() < 0.3
    lid_angle = (math.pi / 2 if lower else -math.pi / 2) + rng.uniform(-0.35, 0.35)
    noise = rng.uniform(1.0, 3.0)
    glints = int(rng.integers(0, 3))
    glint_r = rng.uniform(2.0, 3.0)
    pupil = EllipseParams.make(cx, cy, a, b, theta)
    common = dict(iris_center=(cx + off[0], cy + off[1]), iris_radius=iris_r, width=width, height=height,
                  lid_angle=lid_angle, noise_sigma=noise, seed=int(seed * 100003 + index),
                  frame_id=f"f{index:04d}")
    lashes = int(rng.integers(4, 13))
    if kind == CLEAN:
        # lashes stay short of the pupil so its whole rim is visible
        margin = rng.uniform(15.0, 60.0)
        return SceneSpec(pupil=pupil, occlusion=0.0, lid_margin=margin, lash_strokes=lashes,
                         lash_length=min(30.0, margin - 5.0), glint_count=glints,
                         glint_radius=glint_r, **common)
    if kind == OCCLUDED:
        return SceneSpec(pupil=pupil, occlusion=occlusion, lid_margin=0.0, lash_strokes=lashes,
                         glint_count=glints, glint_radius=glint_r, **common)
    # closed eye: the lid covers the whole iris
    return SceneSpec(pupil=None, occlusion=1.0, lid_margin=rng.uniform(0.0, 30.0),
                     lash_strokes=lashes, **common)


def corpus_specs(n_clean: int, n_occluded: int, n_blink: int, seed: int = 2024,
                 width: int = 1280, height: int = 720, occlusion_range=(0.15, 0.45)) -> list:
    """Frames in the order clean, occluded, blink; each frame seeded from (seed, index)."""
    specs = []
    kinds = [CLEAN] * n_clean + [OCCLUDED] * n_occluded + [BLINK] * n_blink
    for i, kind in enumerate(kinds):
        rng = np.random.default_rng([seed, i])
        occ = rng.uniform(*occlusion_range)
        specs.append(_eye(rng, width, height, occ, kind, i, seed))
    return specs


PRESETS = {
    "acceptance": (114, 44, 42),
    "smoke": (6, 3, 3),
}


def preset(name: str, seed: int = 2024) -> list:
    if name not in PRESETS:
        raise SpecError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return corpus_specs(*PRESETS[name], seed=seed)
