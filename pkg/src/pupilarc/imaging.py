"""Gray rasters, PGM I/O, smoothing, Sobel gradients and summed-area tables."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import InvalidArgument, ParseError

#: Direction symbol stored for pixels whose gradient is exactly zero.
FLAT = -1
N_DIRECTIONS = 8
_BIN_WIDTH = math.pi / N_DIRECTIONS


@dataclass(frozen=True, eq=False)
class GrayImage:
    """An 8-bit intensity raster; ``pixels[y, x]`` is the value at column x, row y."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise InvalidArgument(f"image must be a non-empty 2-D raster, got shape {px.shape}")
        if px.dtype != np.uint8:
            if px.size and (px.min() < 0 or px.max() > 255):
                raise InvalidArgument("intensities must lie in 0..255")
            px = px.astype(np.uint8)
        px = np.ascontiguousarray(px)
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_bytes(cls, width: int, height: int, data) -> "GrayImage":
        buf = np.frombuffer(bytes(data), dtype=np.uint8)
        if buf.size != width * height:
            raise InvalidArgument(f"expected {width * height} bytes, got {buf.size}")
        return cls(buf.reshape(height, width).copy())

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def data(self) -> bytes:
        return self.pixels.tobytes()

    def crop(self, x: int, y: int, w: int, h: int) -> "GrayImage":
        return GrayImage(self.pixels[y:y + h, x:x + w].copy())

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    __hash__ = None


# --------------------------------------------------------------------------- PGM


def _header_tokens(buf: bytes, count: int):
    tokens = []
    pos = 0
    n = len(buf)
    while len(tokens) < count:
        while pos < n and buf[pos:pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos:pos + 1] == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ParseError("truncated PGM header")
        tokens.append(buf[start:pos])
    return tokens, pos


def load_pgm(data: bytes) -> GrayImage:
    """Decode a binary (P5) PGM with maxval <= 255."""
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise ParseError("PGM input must be bytes")
    data = bytes(data)
    if data[:2] != b"P5":
        raise ParseError(f"unsupported PGM magic {data[:2]!r}; only binary P5 is read")
    tokens, pos = _header_tokens(data[2:], 3)
    pos += 2
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise ParseError(f"non-numeric PGM header field: {exc}") from None
    if width < 1 or height < 1:
        raise ParseError("PGM dimensions must be positive")
    if not 1 <= maxval <= 255:
        raise ParseError(f"maxval {maxval} not in 1..255")
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise ParseError("missing whitespace after PGM header")
    payload = data[pos + 1:]
    if len(payload) < width * height:
        raise ParseError(f"PGM payload truncated: {len(payload)} of {width * height} bytes")
    pixels = np.frombuffer(payload, dtype=np.uint8, count=width * height).reshape(height, width)
    return GrayImage(pixels.copy())


def dump_pgm(img: GrayImage, comment: str | None = None) -> bytes:
    header = b"P5\n"
    if comment:
        for line in comment.splitlines():
            header += b"# " + line.encode("ascii", "replace") + b"\n"
    header += f"{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.data


def read_pgm(path) -> GrayImage:
    return load_pgm(Path(path).read_bytes())


def write_pgm(path, img: GrayImage) -> None:
    Path(path).write_bytes(dump_pgm(img))


def write_ppm(path, rgb: np.ndarray) -> None:
    """Write an (H, W, 3) uint8 array as binary PPM (P6)."""
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    h, w, _ = rgb.shape
    Path(path).write_bytes(f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes())


# ---------------------------------------------------------------------- filtering


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(math.ceil(3.0 * sigma))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (t / sigma) ** 2)
    return k / k.sum()


def gaussian_smooth(img: GrayImage, sigma: float = 1.0) -> GrayImage:
    """Separable Gaussian blur with replicated borders, rounded back to 8 bits."""
    if not sigma > 0:
        raise InvalidArgument(f"sigma must be positive, got {sigma}")
    return GrayImage(kernels.smooth_rows_cols(img.pixels, gaussian_kernel(sigma)))


# ---------------------------------------------------------------------- gradients


@dataclass(frozen=True, eq=False)
class GradientField:
    """Per-pixel Sobel derivatives, magnitude and quantized direction symbol.

    ``dir8`` is built on first access; most callers only need it on edge pixels
    and can use :meth:`directions_at` instead.
    """

    gx: np.ndarray
    gy: np.ndarray
    mag: np.ndarray

    @property
    def shape(self):
        return self.mag.shape

    @functools.cached_property
    def dir8(self) -> np.ndarray:
        d = quantize_directions(self.gx, self.gy)
        d.flags.writeable = False
        return d

    def directions_at(self, xs, ys) -> np.ndarray:
        return quantize_directions(self.gx[ys, xs], self.gy[ys, xs])

    @classmethod
    def from_derivatives(cls, gx, gy) -> "GradientField":
        gx = np.asarray(gx, dtype=np.float64)
        gy = np.asarray(gy, dtype=np.float64)
        if gx.shape != gy.shape:
            raise InvalidArgument("gx and gy must share a shape")
        mag = np.sqrt(gx * gx + gy * gy)
        for arr in (gx, gy, mag):
            arr.flags.writeable = False
        return cls(gx, gy, mag)


def quantize_direction(gx: float, gy: float) -> int:
    """Map a gradient to one of 8 orientation cells of width 22.5 degrees.

    The angle is ``atan(gy / gx)`` in [-90, 90] degrees; a vertical gradient
    (either sign) falls into the last cell. A zero gradient yields :data:`FLAT`.
    """
    if gx == 0 and gy == 0:
        return FLAT
    if gx == 0:
        theta = math.pi / 2
    else:
        theta = math.atan(gy / gx)
    return min(int(math.floor((theta + math.pi / 2) / _BIN_WIDTH)), N_DIRECTIONS - 1)


def quantize_directions(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Vectorized :func:`quantize_direction`; returns int8 symbols."""
    gx = np.asarray(gx, dtype=np.float64)
    gy = np.asarray(gy, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        theta = np.arctan(gy / gx)
    vertical = gx == 0
    theta = np.where(vertical, math.pi / 2, theta)
    bins = np.floor((theta + math.pi / 2) / _BIN_WIDTH)
    bins = np.clip(bins, 0, N_DIRECTIONS - 1).astype(np.int8)
    bins[vertical & (gy == 0)] = FLAT
    return bins


def sobel(a: np.ndarray):
    """3x3 Sobel derivatives of a 2-D array; the 1-pixel border copies the nearest interior value."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] < 3 or a.shape[1] < 3:
        raise InvalidArgument(f"gradients need at least a 3x3 image, got shape {a.shape}")
    return kernels.sobel(a)


def compute_gradients(img: GrayImage) -> GradientField:
    gx, gy = sobel(img.pixels)
    return GradientField.from_derivatives(gx, gy)


# ----------------------------------------------------------------- summed areas


@dataclass(frozen=True, eq=False)
class IntegralImage:
    """Summed-area table with one leading row and column of zeros.

    ``sat[j, i]`` holds the sum of intensities over columns [0, i) and rows [0, j).
    """

    sat: np.ndarray

    @property
    def width(self) -> int:
        return self.sat.shape[1] - 1

    @property
    def height(self) -> int:
        return self.sat.shape[0] - 1


def integral(img: GrayImage) -> IntegralImage:
    sat = kernels.integral_table(img.pixels)
    sat.flags.writeable = False
    return IntegralImage(sat)


def box_sum(ii: IntegralImage, rect) -> int:
    """Sum over ``rect = (x, y, w, h)`` using four table lookups."""
    x, y, w, h = (int(v) for v in rect)
    if w < 0 or h < 0 or x < 0 or y < 0 or x + w > ii.width or y + h > ii.height:
        raise InvalidArgument(f"rect {rect} outside {ii.width}x{ii.height} image")
    s = ii.sat
    return int(s[y + h, x + w] - s[y, x + w] - s[y + h, x] + s[y, x])
