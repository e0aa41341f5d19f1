"""Conic fitting and ellipse numerics.

Fitting runs Taubin's method first and falls back to Fitzgibbon's
ellipse-specific least squares when Taubin returns a non-ellipse. Fit
quality is measured with exact orthogonal point-to-ellipse distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import FitError, InvalidArgument

TAUBIN = "taubin"
FITZGIBBON = "fitzgibbon"


@dataclass(frozen=True)
class EllipseParams:
    """Geometric ellipse: center, semi-axes ``a >= b > 0`` and major-axis angle in [0, pi)."""

    cx: float
    cy: float
    a: float
    b: float
    theta: float

    def __post_init__(self):
        if not (self.b > 0 and self.a >= self.b):
            raise InvalidArgument(f"need a >= b > 0, got a={self.a}, b={self.b}")
        if not 0.0 <= self.theta < math.pi:
            raise InvalidArgument(f"theta {self.theta} outside [0, pi)")

    @classmethod
    def make(cls, cx, cy, a, b, theta=0.0) -> "EllipseParams":
        """Build from arbitrary axis order and angle, canonicalizing both."""
        a = float(a)
        b = float(b)
        theta = float(theta)
        if b > a:
            a, b = b, a
            theta += math.pi / 2
        theta = math.fmod(theta, math.pi)
        if theta < 0:
            theta += math.pi
        if theta >= math.pi:
            theta = 0.0
        if a == b:
            theta = 0.0
        return cls(float(cx), float(cy), a, b, theta)

    def translated(self, dx, dy) -> "EllipseParams":
        return EllipseParams(self.cx + dx, self.cy + dy, self.a, self.b, self.theta)

    def to_json(self) -> dict:
        return {"cx": self.cx, "cy": self.cy, "a": self.a, "b": self.b,
                "theta_deg": math.degrees(self.theta)}

    @classmethod
    def from_json(cls, d) -> "EllipseParams":
        return cls.make(d["cx"], d["cy"], d["a"], d["b"], math.radians(d["theta_deg"]))

    def boundary(self, n: int) -> np.ndarray:
        """``n`` points at uniformly spaced eccentric anomaly."""
        t = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
        c, s = math.cos(self.theta), math.sin(self.theta)
        x = self.a * np.cos(t)
        y = self.b * np.sin(t)
        return np.column_stack([self.cx + c * x - s * y, self.cy + s * x + c * y])


@dataclass(frozen=True)
class Conic:
    """Coefficients of A x² + B xy + C y² + D x + E y + F = 0 with unit norm."""

    coeffs: tuple

    def __post_init__(self):
        v = np.asarray(self.coeffs, dtype=np.float64)
        if v.shape != (6,) or not np.all(np.isfinite(v)):
            raise InvalidArgument("a conic has six finite coefficients")
        if not np.any(v[:3]):
            raise InvalidArgument("quadratic coefficients are all zero")
        v = v / np.linalg.norm(v)
        # fixed sign so equal conics compare equal
        lead = v[0] + v[2]
        if lead < 0 or (lead == 0 and v[np.flatnonzero(v)[0]] < 0):
            v = -v
        object.__setattr__(self, "coeffs", tuple(float(c) for c in v))

    @property
    def discriminant(self) -> float:
        A, B, C = self.coeffs[:3]
        return B * B - 4 * A * C

    @property
    def is_ellipse(self) -> bool:
        return self.discriminant < 0

    def matrix(self) -> np.ndarray:
        A, B, C, D, E, F = self.coeffs
        return np.array([[A, B / 2, D / 2], [B / 2, C, E / 2], [D / 2, E / 2, F]])

    @classmethod
    def from_matrix(cls, Q) -> "Conic":
        return cls((Q[0, 0], 2 * Q[0, 1], Q[1, 1], 2 * Q[0, 2], 2 * Q[1, 2], Q[2, 2]))

    def evaluate(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        x, y = p[:, 0], p[:, 1]
        A, B, C, D, E, F = self.coeffs
        return A * x * x + B * x * y + C * y * y + D * x + E * y + F

    def to_params(self) -> EllipseParams:
        """Geometric parameters of a real ellipse; raises FitError otherwise."""
        A, B, C, D, E, F = self.coeffs
        det = 4 * A * C - B * B
        if not det > 0:
            raise FitError("conic is not an ellipse")
        cx = (B * E - 2 * C * D) / det
        cy = (B * D - 2 * A * E) / det
        fc = F + 0.5 * (D * cx + E * cy)
        if fc > 0:
            A, B, C, fc = -A, -B, -C, -fc
        if not fc < 0 or A <= 0:
            raise FitError("imaginary ellipse")
        root = math.hypot(A - C, B)
        lam_small = 0.5 * (A + C - root)
        lam_big = 0.5 * (A + C + root)
        if lam_small <= 0:
            raise FitError("degenerate ellipse")
        a = math.sqrt(-fc / lam_small)
        b = math.sqrt(-fc / lam_big)
        theta = 0.5 * math.atan2(-B, C - A)
        return EllipseParams.make(cx, cy, a, b, theta)


def to_conic(e: EllipseParams) -> Conic:
    c, s = math.cos(e.theta), math.sin(e.theta)
    ia, ib = 1.0 / (e.a * e.a), 1.0 / (e.b * e.b)
    A = c * c * ia + s * s * ib
    B = 2 * s * c * (ia - ib)
    C = s * s * ia + c * c * ib
    D = -2 * A * e.cx - B * e.cy
    E = -B * e.cx - 2 * C * e.cy
    F = A * e.cx ** 2 + B * e.cx * e.cy + C * e.cy ** 2 - 1.0
    return Conic((A, B, C, D, E, F))


@dataclass(frozen=True)
class FitResult:
    ellipse: EllipseParams
    rmse: float
    n_points: int
    method: str


# ------------------------------------------------------------------- fitting


def _as_points(points) -> np.ndarray:
    p = np.asarray(points, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != 2:
        raise InvalidArgument("points must have shape (n, 2)")
    if len(p) < 5:
        raise FitError(f"need at least 5 points, got {len(p)}")
    return p


def _normalize(p):
    mean = p.mean(axis=0)
    q = p - mean
    scale = math.sqrt(float((q * q).sum()) / (2 * len(q)))
    if not scale > 0:
        raise FitError("all points coincide")
    q /= scale
    H = np.array([[1 / scale, 0, -mean[0] / scale], [0, 1 / scale, -mean[1] / scale], [0, 0, 1.0]])
    return q, H


def _denormalize(coeffs, H) -> Conic:
    Qn = Conic(coeffs).matrix()
    return Conic.from_matrix(H.T @ Qn @ H)


def fit_taubin(points) -> Conic:
    """Taubin's gradient-weighted algebraic fit. May return a hyperbola."""
    p = _as_points(points)
    q, H = _normalize(p)
    x, y = q[:, 0], q[:, 1]
    Z = np.column_stack([x * x, x * y, y * y, x, y])
    zbar = Z.mean(axis=0)
    Zc = Z - zbar
    M = Zc.T @ Zc / len(q)
    sxx = zbar[0]
    syy = zbar[2]
    sxy = zbar[1]
    # x, y are centred so their means vanish
    N = np.array([
        [4 * sxx, 2 * sxy, 0, 0, 0],
        [2 * sxy, sxx + syy, 2 * sxy, 0, 0],
        [0, 2 * sxy, 4 * syy, 0, 0],
        [0, 0, 0, 1, 0],
        [0, 0, 0, 0, 1],
    ])
    try:
        L = np.linalg.cholesky(N)
    except np.linalg.LinAlgError:
        raise FitError("degenerate point set (normalization matrix singular)") from None
    Linv = np.linalg.inv(L)
    K = Linv @ M @ Linv.T
    w, V = np.linalg.eigh(K)
    if w[1] <= 1e-13 * max(w[-1], 1e-300):
        raise FitError("rank-deficient scatter matrix")
    sol = Linv.T @ V[:, 0]
    F = -float(zbar @ sol)
    coeffs = np.append(sol, F)
    if not np.any(coeffs[:3]):
        raise FitError("Taubin fit has no quadratic part")
    return _denormalize(coeffs, H)


_C1_INV = np.array([[0.0, 0.0, 0.5], [0.0, -1.0, 0.0], [0.5, 0.0, 0.0]])


def fit_fitzgibbon(points) -> Conic:
    """Direct least squares subject to 4AC - B² = 1 (numerically stable form)."""
    p = _as_points(points)
    q, H = _normalize(p)
    x, y = q[:, 0], q[:, 1]
    D1 = np.column_stack([x * x, x * y, y * y])
    D2 = np.column_stack([x, y, np.ones_like(x)])
    S1 = D1.T @ D1
    S2 = D1.T @ D2
    S3 = D2.T @ D2
    try:
        T = -np.linalg.solve(S3, S2.T)
    except np.linalg.LinAlgError:
        raise FitError("degenerate point set") from None
    M = _C1_INV @ (S1 + S2 @ T)
    w, V = np.linalg.eig(M)
    V = np.real_if_close(V, tol=1e6)
    if np.iscomplexobj(V):
        V = V.real
    cond = 4 * V[0] * V[2] - V[1] ** 2
    ok = np.flatnonzero(cond > 0)
    if len(ok) == 0:
        raise FitError("no elliptical solution in the constraint pencil")
    a1 = V[:, ok[0]]
    coeffs = np.concatenate([a1, T @ a1])
    return _denormalize(coeffs, H)


def fit_ellipse(points) -> FitResult:
    """Taubin first; Fitzgibbon when Taubin yields a non-ellipse or fails."""
    p = _as_points(points)
    try:
        conic = fit_taubin(p)
        if conic.is_ellipse:
            e = conic.to_params()
            return FitResult(e, rmse(e, p), len(p), TAUBIN)
    except FitError:
        pass
    conic = fit_fitzgibbon(p)
    e = conic.to_params()
    return FitResult(e, rmse(e, p), len(p), FITZGIBBON)


# ---------------------------------------------------------- distance & error


def canonical_coords(e: EllipseParams, points) -> tuple:
    """Absolute coordinates of points in the ellipse's axis-aligned frame."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    dx = p[:, 0] - e.cx
    dy = p[:, 1] - e.cy
    c, s = math.cos(e.theta), math.sin(e.theta)
    return np.abs(c * dx + s * dy), np.abs(-s * dx + c * dy)


def point_distances(e: EllipseParams, points) -> np.ndarray:
    u, v = canonical_coords(e, points)
    return kernels.ellipse_distances(u, v, e.a, e.b)


def point_ellipse_distance(e: EllipseParams, p) -> float:
    """Euclidean distance from ``p`` to the nearest point on the ellipse curve."""
    return float(point_distances(e, [p])[0])


def rmse(e: EllipseParams, points) -> float:
    d = point_distances(e, points)
    if len(d) == 0:
        raise InvalidArgument("rmse of an empty point set")
    return math.sqrt(float(np.mean(d * d)))


def ramanujan_perimeter(a: float, b: float) -> float:
    s = a + b
    h = ((a - b) / s) ** 2
    return math.pi * s * (1 + 3 * h / (10 + math.sqrt(4 - 3 * h)))


def perimeter(e: EllipseParams) -> float:
    return ramanujan_perimeter(e.a, e.b)


def eccentricity(e: EllipseParams) -> float:
    return math.sqrt(max(0.0, 1.0 - (e.b / e.a) ** 2))


# ------------------------------------------------------------- rasterization


def bounding_box(e: EllipseParams):
    """Inclusive integer pixel box (x0, y0, x1, y1) covering the ellipse."""
    c, s = math.cos(e.theta), math.sin(e.theta)
    hx = math.hypot(e.a * c, e.b * s)
    hy = math.hypot(e.a * s, e.b * c)
    return (math.floor(e.cx - hx), math.floor(e.cy - hy), math.ceil(e.cx + hx), math.ceil(e.cy + hy))


def inside_mask(e: EllipseParams, x0: int, y0: int, x1: int, y1: int) -> np.ndarray:
    """Pixel-centre inclusion test over the inclusive box; pixel (x, y) is centred at (x, y)."""
    xs = np.arange(x0, x1 + 1, dtype=np.float64) - e.cx
    ys = np.arange(y0, y1 + 1, dtype=np.float64)[:, None] - e.cy
    c, s = math.cos(e.theta), math.sin(e.theta)
    u = (c * xs + s * ys) / e.a
    v = (-s * xs + c * ys) / e.b
    return u * u + v * v <= 1.0


def rasterize(e: EllipseParams, width: int, height: int) -> np.ndarray:
    """Boolean (height, width) mask of pixels whose centres lie inside the ellipse."""
    mask = np.zeros((height, width), dtype=bool)
    x0, y0, x1, y1 = bounding_box(e)
    x0, y0 = max(x0, 0), max(y0, 0)
    x1, y1 = min(x1, width - 1), min(y1, height - 1)
    if x0 <= x1 and y0 <= y1:
        mask[y0:y1 + 1, x0:x1 + 1] = inside_mask(e, x0, y0, x1, y1)
    return mask


def overlap_ratio(e1: EllipseParams, e2: EllipseParams, canvas) -> float:
    """Intersection over union of the two rasterized interiors on a (width, height) canvas."""
    width, height = canvas
    b1 = bounding_box(e1)
    b2 = bounding_box(e2)
    x0 = max(min(b1[0], b2[0]), 0)
    y0 = max(min(b1[1], b2[1]), 0)
    x1 = min(max(b1[2], b2[2]), width - 1)
    y1 = min(max(b1[3], b2[3]), height - 1)
    if x0 > x1 or y0 > y1:
        return 0.0
    m1 = inside_mask(e1, x0, y0, x1, y1)
    m2 = inside_mask(e2, x0, y0, x1, y1)
    union = int(np.count_nonzero(m1 | m2))
    if union == 0:
        return 0.0
    return int(np.count_nonzero(m1 & m2)) / union
