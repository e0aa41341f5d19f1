"""Pure-Python/numpy implementations of the hot kernels.

These are the reference behaviour; ``_ckernels.pyx`` must agree with them
exactly for routing and to within 1e-9 for distances.
"""

import math

import numpy as np

MAX_NEWTON_ITERATIONS = 64
AXIS_SNAP = 1e-10

# movement codes shared with the compiled kernel
LEFT, RIGHT, UP, DOWN = 0, 1, 2, 3


def ellipse_distances(u, v, a, b):
    """Distance from first-quadrant canonical points (u, v) to x²/a² + y²/b² = 1.

    Requires a >= b > 0 and u, v >= 0. The nearest-point condition is solved
    by Newton iteration that falls back to bisection whenever a Newton step
    would leave the bracket or fail to halve it.
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    v = np.ascontiguousarray(v, dtype=np.float64)
    a = float(a)
    b = float(b)
    out = np.empty_like(u)
    if a == b:
        np.abs(np.hypot(u, v) - a, out=out)
        return out

    # within AXIS_SNAP of an axis the point is moved onto it; the distance is 1-Lipschitz
    on_axis = v <= AXIS_SNAP * b
    if on_axis.any():
        uu = u[on_axis]
        denom = a * a - b * b
        numer = a * uu
        inner = numer < denom
        xde = np.where(inner, numer / denom, 1.0)
        x0 = np.where(inner, a * xde, a)
        x1 = np.where(inner, b * np.sqrt(np.clip(1.0 - xde * xde, 0.0, None)), 0.0)
        out[on_axis] = np.hypot(x0 - uu, x1)

    minor_axis = (~on_axis) & (u <= AXIS_SNAP * a)
    out[minor_axis] = np.abs(v[minor_axis] - b)

    gen = ~(on_axis | minor_axis)
    if gen.any():
        uu = u[gen]
        vv = v[gen]
        z0 = uu / a
        z1 = vv / b
        r0 = (a / b) ** 2
        n0 = r0 * z0
        lo = z1 - 1.0
        hi = np.hypot(n0, z1) - 1.0
        s = 0.5 * (lo + hi)
        dxold = hi - lo
        dx = dxold.copy()
        active = np.ones(len(s), dtype=bool)
        for _ in range(MAX_NEWTON_ITERATIONS):
            idx = np.flatnonzero(active)
            if len(idx) == 0:
                break
            sa = s[idx]
            p = n0[idx] / (sa + r0)
            q = z1[idx] / (sa + 1.0)
            g = p * p + q * q - 1.0
            dg = -2.0 * (p * p / (sa + r0) + q * q / (sa + 1.0))
            lo_a = np.where(g > 0, sa, lo[idx])
            hi_a = np.where(g > 0, hi[idx], sa)
            dxo = dx[idx]
            bis = ((((sa - hi_a) * dg - g) * ((sa - lo_a) * dg - g)) > 0) | (np.abs(2.0 * g) > np.abs(dxold[idx] * dg))
            step = np.where(bis, 0.5 * (hi_a - lo_a), g / dg)
            snew = np.where(bis, lo_a + step, sa - step)
            done = (g == 0) | (np.abs(step) <= 1e-15 * np.maximum(1.0, np.abs(snew)))
            snew = np.where(g == 0, sa, snew)
            lo[idx] = lo_a
            hi[idx] = hi_a
            dxold[idx] = dxo
            dx[idx] = step
            s[idx] = snew
            active[idx[done]] = False
        x0 = r0 * uu / (s + r0)
        x1 = vv / (s + 1.0)
        out[gen] = np.hypot(x0 - uu, x1 - vv)
    return out


def smooth_rows_cols(pixels, k):
    """Separable convolution of a uint8 raster with the odd symmetric kernel ``k``.

    Rows first, then columns, with replicated borders; rounded half up to uint8.
    """
    a = np.asarray(pixels, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    r = len(k) // 2
    h, w = a.shape
    p = np.pad(a, ((0, 0), (r, r)), mode="edge")
    t = k[0] * p[:, 0:w]
    for i in range(1, len(k)):
        t += k[i] * p[:, i:i + w]
    p = np.pad(t, ((r, r), (0, 0)), mode="edge")
    out = k[0] * p[0:h]
    for i in range(1, len(k)):
        out += k[i] * p[i:i + h]
    out = np.floor(out + 0.5)
    np.clip(out, 0, 255, out=out)
    return out.astype(np.uint8)


def sobel(pixels):
    """3x3 Sobel (gx, gy); the 1-pixel border copies the nearest interior value."""
    a = np.asarray(pixels, dtype=np.float64)
    # separable form: [1 2 1] smoothing across, central difference along
    vs = a[:-2] + 2.0 * a[1:-1] + a[2:]
    hs = a[:, :-2] + 2.0 * a[:, 1:-1] + a[:, 2:]
    gx = np.pad(vs[:, 2:] - vs[:, :-2], 1, mode="edge")
    gy = np.pad(hs[2:] - hs[:-2], 1, mode="edge")
    return gx, gy


def integral_table(pixels):
    """(h+1, w+1) int64 summed-area table with a zero first row and column."""
    px = np.asarray(pixels)
    h, w = px.shape
    sat = np.zeros((h + 1, w + 1), dtype=np.int64)
    np.cumsum(px, axis=0, dtype=np.int64, out=sat[1:, 1:])
    np.cumsum(sat[1:, 1:], axis=1, out=sat[1:, 1:])
    return sat


def haar_best(sat, aperture, inner, y_lo, y_hi, x_lo, x_hi, stride):
    """Best centre-surround response over outer windows with top-left corners on a grid.

    Corners run over [y_lo, y_hi] x [x_lo, x_hi] (inclusive) at ``stride``;
    the first maximum in row-major order wins. Returns (score, y0, x0).
    """
    sat = np.asarray(sat)
    off = aperture // 2 - inner // 2
    ys = np.arange(y_lo, y_hi + 1, stride)[:, None]
    xs = np.arange(x_lo, x_hi + 1, stride)[None, :]

    def box(y, x, side):
        return sat[y + side, x + side] - sat[y, x + side] - sat[y + side, x] + sat[y, x]

    outer = box(ys, xs, aperture)
    inn = box(ys + off, xs + off, inner)
    a_in = inner * inner
    a_ring = aperture * aperture - a_in
    r = (outer - inn) / a_ring - inn / a_in
    k = int(np.argmax(r))
    iy, ix = divmod(k, r.shape[1])
    return float(r[iy, ix]), int(y_lo + iy * stride), int(x_lo + ix * stride)


def _box(sat, y, x, hh, ww):
    return sat[y + hh, x + ww] - sat[y, x + ww] - sat[y + hh, x] + sat[y, x]


def haar_blocks(sat, aperture, inner, y_lo, y_hi, x_lo, x_hi, block, floor_score):
    """Best response over the blocks of corners whose upper bound reaches ``floor_score``.

    Blocks are ``block`` x ``block`` squares of top-left corners anchored on the
    coarse grid (y_lo + j*block, x_lo + i*block) and clipped to the range. Over
    a block the ring sum is at most (union of outer boxes) - (intersection of
    inner boxes), which bounds the response from above without visiting the
    block. Ties go to the smallest (y0, x0). Returns (score, y0, x0), or
    (-inf, -1, -1) when no block qualifies.
    """
    sat = np.asarray(sat)
    off = aperture // 2 - inner // 2
    a_in = inner * inner
    a_ring = aperture * aperture - a_in
    gy = np.arange(y_lo, y_hi + 1, block)[:, None]
    gx = np.arange(x_lo, x_hi + 1, block)[None, :]
    dy = np.minimum(gy + block - 1, y_hi) - gy
    dx = np.minimum(gx + block - 1, x_hi) - gx
    union = _box(sat, gy, gx, aperture + dy, aperture + dx)
    ih = np.maximum(inner - dy, 0)
    iw = np.maximum(inner - dx, 0)
    inter = np.where((ih > 0) & (iw > 0), _box(sat, gy + dy + off, gx + dx + off, ih, iw), 0)
    ub = (union - inter) / a_ring - inter / a_in
    ys, xs = [], []
    for j, i in np.argwhere(ub >= floor_score):
        y0, x0 = int(gy[j, 0]), int(gx[0, i])
        yy, xx = np.mgrid[y0:y0 + int(dy[j, 0]) + 1, x0:x0 + int(dx[0, i]) + 1]
        ys.append(yy.ravel())
        xs.append(xx.ravel())
    if not ys:
        return -math.inf, -1, -1
    ys = np.concatenate(ys)
    xs = np.concatenate(xs)
    outer = _box(sat, ys, xs, aperture, aperture)
    inn = _box(sat, ys + off, xs + off, inner, inner)
    r = (outer - inn) / a_ring - inn / a_in
    k = np.lexsort((xs, ys, -r))[0]
    return float(r[k]), int(ys[k]), int(xs[k])


def _pick(mag, h, w, cand):
    """Best of up to three candidate pixels; first listed wins ties."""
    best = -1.0
    by = bx = -1
    for (y, x) in cand:
        if 1 <= y < h - 1 and 1 <= x < w - 1:
            m = mag[y, x]
            if m > best:
                best = m
                by, bx = y, x
    return best, by, bx


def _forward(direction, y, x):
    if direction == LEFT:
        return ((y, x - 1), (y - 1, x - 1), (y + 1, x - 1))
    if direction == RIGHT:
        return ((y, x + 1), (y - 1, x + 1), (y + 1, x + 1))
    if direction == UP:
        return ((y - 1, x), (y - 1, x - 1), (y - 1, x + 1))
    return ((y + 1, x), (y + 1, x - 1), (y + 1, x + 1))


def _side_max(mag, edge, h, w, cand):
    best = -1.0
    for (y, x) in cand:
        if 1 <= y < h - 1 and 1 <= x < w - 1 and not edge[y, x]:
            if mag[y, x] > best:
                best = mag[y, x]
    return best


def _walk(mag, horizontal, edge, y, x, direction, threshold):
    h, w = mag.shape
    out = []
    dy = dx = 0
    if direction == LEFT:
        dx = -1
    elif direction == RIGHT:
        dx = 1
    elif direction == UP:
        dy = -1
    else:
        dy = 1
    while True:
        if horizontal[y, x]:
            if direction not in (LEFT, RIGHT):
                if dx < 0:
                    direction = LEFT
                elif dx > 0:
                    direction = RIGHT
                else:
                    lm = _side_max(mag, edge, h, w, _forward(LEFT, y, x))
                    rm = _side_max(mag, edge, h, w, _forward(RIGHT, y, x))
                    if lm < 0 and rm < 0:
                        break
                    direction = LEFT if lm >= rm else RIGHT
        else:
            if direction not in (UP, DOWN):
                if dy < 0:
                    direction = UP
                elif dy > 0:
                    direction = DOWN
                else:
                    um = _side_max(mag, edge, h, w, _forward(UP, y, x))
                    dm = _side_max(mag, edge, h, w, _forward(DOWN, y, x))
                    if um < 0 and dm < 0:
                        break
                    direction = UP if um >= dm else DOWN
        best, ny, nx = _pick(mag, h, w, _forward(direction, y, x))
        if ny < 0 or best < threshold or edge[ny, nx]:
            break
        edge[ny, nx] = 1
        out.append((nx, ny))
        dy = ny - y
        dx = nx - x
        y, x = ny, nx
    return out


def route_edges(mag, horizontal, anchors, threshold):
    """Grow pixel chains from anchors by following the gradient ridge.

    ``anchors`` is an (n, 2) array of (y, x), already in processing order,
    away from the 1-pixel border.
    Returns a list of (k, 2) int32 arrays of (x, y) chain coordinates.
    """
    mag = np.asarray(mag, dtype=np.float64)
    horizontal = np.asarray(horizontal, dtype=np.uint8)
    h, w = mag.shape
    edge = np.zeros((h, w), dtype=np.uint8)
    chains = []
    for ay, ax in np.asarray(anchors, dtype=np.int64):
        ay = int(ay)
        ax = int(ax)
        if edge[ay, ax]:
            continue
        # an anchor beside an existing chain, across the edge, is a plateau duplicate
        if horizontal[ay, ax]:
            if edge[ay - 1, ax] or edge[ay + 1, ax]:
                continue
            first, second = LEFT, RIGHT
        else:
            if edge[ay, ax - 1] or edge[ay, ax + 1]:
                continue
            first, second = UP, DOWN
        edge[ay, ax] = 1
        a = _walk(mag, horizontal, edge, ay, ax, first, threshold)
        b = _walk(mag, horizontal, edge, ay, ax, second, threshold)
        a.reverse()
        chain = a + [(ax, ay)] + b
        chains.append(np.asarray(chain, dtype=np.int32).reshape(-1, 2))
    return chains


def thin_chain(pts):
    """Drop chain pixels whose predecessor and successor already touch."""
    pts = [tuple(p) for p in np.asarray(pts).tolist()]
    out = []
    for p in pts:
        out.append(p)
        while len(out) >= 3:
            px, py = out[-3]
            qx, qy = out[-1]
            if abs(px - qx) <= 1 and abs(py - qy) <= 1:
                del out[-2]
            else:
                break
    return np.asarray(out, dtype=np.int32).reshape(-1, 2)
