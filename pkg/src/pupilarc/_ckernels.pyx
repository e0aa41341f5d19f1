# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the routines in ``_pykernels``.

Behaviour must match the pure-Python versions: identical chains from
``route_edges`` and ``thin_chain``, distances within 1e-9.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, hypot, isfinite, floor, INFINITY

cnp.import_array()

DEF MAX_NEWTON_ITERATIONS = 64
DEF AXIS_SNAP = 1e-10
DEF LEFT = 0
DEF RIGHT = 1
DEF UP = 2
DEF DOWN = 3


cdef double _distance(double u, double v, double a, double b) noexcept nogil:
    cdef double denom, numer, xde, x0, x1, z0, z1, r0, n0, lo, hi, s
    cdef double p, q, g, dg, step, dxold, dxo
    cdef int it
    cdef bint bis
    if a == b:
        return fabs(hypot(u, v) - a)
    if v <= AXIS_SNAP * b:
        denom = a * a - b * b
        numer = a * u
        if numer < denom:
            xde = numer / denom
            x0 = a * xde
            x1 = 1.0 - xde * xde
            x1 = b * sqrt(x1) if x1 > 0 else 0.0
            return hypot(x0 - u, x1)
        return hypot(a - u, 0.0)
    if u <= AXIS_SNAP * a:
        return fabs(v - b)
    z0 = u / a
    z1 = v / b
    r0 = (a / b) * (a / b)
    n0 = r0 * z0
    lo = z1 - 1.0
    hi = hypot(n0, z1) - 1.0
    s = 0.5 * (lo + hi)
    dxold = hi - lo
    step = dxold
    for it in range(MAX_NEWTON_ITERATIONS):
        p = n0 / (s + r0)
        q = z1 / (s + 1.0)
        g = p * p + q * q - 1.0
        if g == 0:
            break
        dg = -2.0 * (p * p / (s + r0) + q * q / (s + 1.0))
        if g > 0:
            lo = s
        else:
            hi = s
        dxo = step
        bis = (((s - hi) * dg - g) * ((s - lo) * dg - g) > 0) or (fabs(2.0 * g) > fabs(dxold * dg))
        if bis:
            step = 0.5 * (hi - lo)
            s = lo + step
        else:
            step = g / dg
            s = s - step
        dxold = dxo
        if fabs(step) <= 1e-15 * (fabs(s) if fabs(s) > 1.0 else 1.0):
            break
    x0 = r0 * u / (s + r0)
    x1 = v / (s + 1.0)
    return hypot(x0 - u, x1 - v)


def ellipse_distances(u, v, double a, double b):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] uu = np.ascontiguousarray(u, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vv = np.ascontiguousarray(v, dtype=np.float64).ravel()
    cdef Py_ssize_t n = uu.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double[::1] pu = uu
    cdef double[::1] pv = vv
    with nogil:
        for i in range(n):
            o[i] = _distance(pu[i], pv[i], a, b)
    return out.reshape(np.shape(u))


def smooth_rows_cols(pixels, k):
    cdef const unsigned char[:, ::1] px = np.ascontiguousarray(pixels, dtype=np.uint8)
    cdef const double[::1] kk = np.ascontiguousarray(k, dtype=np.float64)
    cdef Py_ssize_t h = px.shape[0], w = px.shape[1], nk = kk.shape[0], r = nk // 2
    cdef Py_ssize_t y, x, i, j
    cdef double acc, v
    tmp_arr = np.empty((h, w), dtype=np.float64)
    out_arr = np.empty((h, w), dtype=np.uint8)
    cdef double[:, ::1] tmp = tmp_arr
    cdef unsigned char[:, ::1] out = out_arr
    cdef double[::1] col = np.empty(h, dtype=np.float64)
    with nogil:
        for y in range(h):
            for x in range(w):
                if r <= x < w - r:
                    acc = kk[0] * px[y, x - r]
                    for i in range(1, nk):
                        acc = acc + kk[i] * px[y, x - r + i]
                    tmp[y, x] = acc
                    continue
                j = x - r
                acc = kk[0] * px[y, j if j > 0 else 0]
                for i in range(1, nk):
                    j = x - r + i
                    if j < 0:
                        j = 0
                    elif j >= w:
                        j = w - 1
                    acc = acc + kk[i] * px[y, j]
                tmp[y, x] = acc
        for y in range(h):
            for x in range(w):
                if r <= y < h - r:
                    acc = kk[0] * tmp[y - r, x]
                    for i in range(1, nk):
                        acc = acc + kk[i] * tmp[y - r + i, x]
                else:
                    j = y - r
                    acc = kk[0] * tmp[j if j > 0 else 0, x]
                    for i in range(1, nk):
                        j = y - r + i
                        if j < 0:
                            j = 0
                        elif j >= h:
                            j = h - 1
                        acc = acc + kk[i] * tmp[j, x]
                v = floor(acc + 0.5)
                if v < 0:
                    v = 0
                elif v > 255:
                    v = 255
                out[y, x] = <unsigned char>v
    return out_arr


def sobel(pixels):
    cdef const double[:, ::1] a = np.ascontiguousarray(pixels, dtype=np.float64)
    cdef Py_ssize_t h = a.shape[0], w = a.shape[1], y, x
    gx_arr = np.empty((h, w), dtype=np.float64)
    gy_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] gx = gx_arr
    cdef double[:, ::1] gy = gy_arr
    with nogil:
        for y in range(1, h - 1):
            for x in range(1, w - 1):
                gx[y, x] = ((a[y - 1, x + 1] + 2.0 * a[y, x + 1]) + a[y + 1, x + 1]) - ((a[y - 1, x - 1] + 2.0 * a[y, x - 1]) + a[y + 1, x - 1])
                gy[y, x] = ((a[y + 1, x - 1] + 2.0 * a[y + 1, x]) + a[y + 1, x + 1]) - ((a[y - 1, x - 1] + 2.0 * a[y - 1, x]) + a[y - 1, x + 1])
        for y in range(1, h - 1):
            gx[y, 0] = gx[y, 1]
            gx[y, w - 1] = gx[y, w - 2]
            gy[y, 0] = gy[y, 1]
            gy[y, w - 1] = gy[y, w - 2]
        for x in range(w):
            gx[0, x] = gx[1, x]
            gx[h - 1, x] = gx[h - 2, x]
            gy[0, x] = gy[1, x]
            gy[h - 1, x] = gy[h - 2, x]
    return gx_arr, gy_arr


def integral_table(pixels):
    cdef const unsigned char[:, ::1] px = np.ascontiguousarray(pixels, dtype=np.uint8)
    cdef Py_ssize_t h = px.shape[0], w = px.shape[1], y, x
    cdef long long row
    sat_arr = np.zeros((h + 1, w + 1), dtype=np.int64)
    cdef long long[:, ::1] sat = sat_arr
    with nogil:
        for y in range(h):
            row = 0
            for x in range(w):
                row = row + px[y, x]
                sat[y + 1, x + 1] = sat[y, x + 1] + row
    return sat_arr


def haar_best(sat, int aperture, int inner, int y_lo, int y_hi, int x_lo, int x_hi, int stride):
    cdef const long long[:, ::1] t = np.ascontiguousarray(sat, dtype=np.int64)
    cdef int off = aperture // 2 - inner // 2
    cdef double a_in = <double>inner * inner
    cdef double a_ring = <double>aperture * aperture - a_in
    cdef int y, x, by = y_lo, bx = x_lo
    cdef long long o, i
    cdef double r, best = -1e300
    cdef bint first = True
    with nogil:
        y = y_lo
        while y <= y_hi:
            x = x_lo
            while x <= x_hi:
                o = t[y + aperture, x + aperture] - t[y, x + aperture] - t[y + aperture, x] + t[y, x]
                i = (t[y + off + inner, x + off + inner] - t[y + off, x + off + inner]
                     - t[y + off + inner, x + off] + t[y + off, x + off])
                r = <double>(o - i) / a_ring - <double>i / a_in
                if first or r > best:
                    best = r
                    by = y
                    bx = x
                    first = False
                x += stride
            y += stride
    return best, by, bx


cdef inline long long _box(const long long[:, ::1] t, int y, int x, int hh, int ww) noexcept nogil:
    return t[y + hh, x + ww] - t[y, x + ww] - t[y + hh, x] + t[y, x]


def haar_blocks(sat, int aperture, int inner, int y_lo, int y_hi, int x_lo, int x_hi, int block,
                double floor_score):
    cdef const long long[:, ::1] t = np.ascontiguousarray(sat, dtype=np.int64)
    cdef int off = aperture // 2 - inner // 2
    cdef double a_in = <double>inner * inner
    cdef double a_ring = <double>aperture * aperture - a_in
    cdef int gy, gx, dy, dx, ih, iw, y, x, by = -1, bx = -1
    cdef long long u, c, o, i
    cdef double ub, r, best = -INFINITY
    with nogil:
        gy = y_lo
        while gy <= y_hi:
            dy = min(gy + block - 1, y_hi) - gy
            gx = x_lo
            while gx <= x_hi:
                dx = min(gx + block - 1, x_hi) - gx
                u = _box(t, gy, gx, aperture + dy, aperture + dx)
                ih = inner - dy
                iw = inner - dx
                c = 0
                if ih > 0 and iw > 0:
                    c = _box(t, gy + dy + off, gx + dx + off, ih, iw)
                ub = <double>(u - c) / a_ring - <double>c / a_in
                if ub >= floor_score:
                    for y in range(gy, gy + dy + 1):
                        for x in range(gx, gx + dx + 1):
                            o = _box(t, y, x, aperture, aperture)
                            i = _box(t, y + off, x + off, inner, inner)
                            r = <double>(o - i) / a_ring - <double>i / a_in
                            if r > best or (r == best and (y < by or (y == by and x < bx))):
                                best = r
                                by = y
                                bx = x
                gx += block
            gy += block
    return best, by, bx


cdef inline void _forward(int direction, int y, int x, int* cy, int* cx) noexcept nogil:
    if direction == LEFT:
        cy[0] = y; cx[0] = x - 1
        cy[1] = y - 1; cx[1] = x - 1
        cy[2] = y + 1; cx[2] = x - 1
    elif direction == RIGHT:
        cy[0] = y; cx[0] = x + 1
        cy[1] = y - 1; cx[1] = x + 1
        cy[2] = y + 1; cx[2] = x + 1
    elif direction == UP:
        cy[0] = y - 1; cx[0] = x
        cy[1] = y - 1; cx[1] = x - 1
        cy[2] = y - 1; cx[2] = x + 1
    else:
        cy[0] = y + 1; cx[0] = x
        cy[1] = y + 1; cx[1] = x - 1
        cy[2] = y + 1; cx[2] = x + 1


cdef double _side_max(const double[:, ::1] mag, unsigned char[:, ::1] edge,
                      int h, int w, int direction, int y, int x) noexcept nogil:
    cdef int cy[3]
    cdef int cx[3]
    cdef int k
    cdef double best = -1.0
    _forward(direction, y, x, cy, cx)
    for k in range(3):
        if 1 <= cy[k] < h - 1 and 1 <= cx[k] < w - 1 and not edge[cy[k], cx[k]]:
            if mag[cy[k], cx[k]] > best:
                best = mag[cy[k], cx[k]]
    return best


cdef Py_ssize_t _walk(const double[:, ::1] mag, const unsigned char[:, ::1] horizontal,
                      unsigned char[:, ::1] edge, int y, int x, int direction,
                      double threshold, int[::1] bx, int[::1] by) noexcept nogil:
    cdef int h = mag.shape[0]
    cdef int w = mag.shape[1]
    cdef int dy = 0, dx = 0
    cdef int cy[3]
    cdef int cx[3]
    cdef int k, ny, nx
    cdef double best, m, lm, rm
    cdef Py_ssize_t n = 0
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
            if direction != LEFT and direction != RIGHT:
                if dx < 0:
                    direction = LEFT
                elif dx > 0:
                    direction = RIGHT
                else:
                    lm = _side_max(mag, edge, h, w, LEFT, y, x)
                    rm = _side_max(mag, edge, h, w, RIGHT, y, x)
                    if lm < 0 and rm < 0:
                        break
                    direction = LEFT if lm >= rm else RIGHT
        else:
            if direction != UP and direction != DOWN:
                if dy < 0:
                    direction = UP
                elif dy > 0:
                    direction = DOWN
                else:
                    lm = _side_max(mag, edge, h, w, UP, y, x)
                    rm = _side_max(mag, edge, h, w, DOWN, y, x)
                    if lm < 0 and rm < 0:
                        break
                    direction = UP if lm >= rm else DOWN
        _forward(direction, y, x, cy, cx)
        best = -1.0
        ny = -1
        nx = -1
        for k in range(3):
            if 1 <= cy[k] < h - 1 and 1 <= cx[k] < w - 1:
                m = mag[cy[k], cx[k]]
                if m > best:
                    best = m
                    ny = cy[k]
                    nx = cx[k]
        if ny < 0 or best < threshold or edge[ny, nx]:
            break
        edge[ny, nx] = 1
        bx[n] = nx
        by[n] = ny
        n += 1
        dy = ny - y
        dx = nx - x
        y = ny
        x = nx
    return n


def route_edges(mag, horizontal, anchors, double threshold):
    cdef const double[:, ::1] m = np.ascontiguousarray(mag, dtype=np.float64)
    cdef const unsigned char[:, ::1] hz = np.ascontiguousarray(horizontal, dtype=np.uint8)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] anc = np.ascontiguousarray(anchors, dtype=np.int64).reshape(-1, 2)
    cdef int h = m.shape[0]
    cdef int w = m.shape[1]
    edge_arr = np.zeros((h, w), dtype=np.uint8)
    cdef unsigned char[:, ::1] edge = edge_arr
    # a walk can never be longer than the number of pixels
    bufa = np.empty(2 * h * w + 1, dtype=np.int32)
    bufb = np.empty(2 * h * w + 1, dtype=np.int32)
    cdef int[::1] ax_ = bufa[: h * w]
    cdef int[::1] ay_ = bufa[h * w: 2 * h * w]
    cdef int[::1] bx_ = bufb[: h * w]
    cdef int[::1] by_ = bufb[h * w: 2 * h * w]
    cdef Py_ssize_t i, na, nb, j, total
    cdef int y, x, first, second
    chains = []
    for i in range(anc.shape[0]):
        y = <int>anc[i, 0]
        x = <int>anc[i, 1]
        if edge[y, x]:
            continue
        if hz[y, x]:
            if edge[y - 1, x] or edge[y + 1, x]:
                continue
            first = LEFT
            second = RIGHT
        else:
            if edge[y, x - 1] or edge[y, x + 1]:
                continue
            first = UP
            second = DOWN
        edge[y, x] = 1
        with nogil:
            na = _walk(m, hz, edge, y, x, first, threshold, ax_, ay_)
            nb = _walk(m, hz, edge, y, x, second, threshold, bx_, by_)
        total = na + nb + 1
        chain = np.empty((total, 2), dtype=np.int32)
        _fill(chain, ax_, ay_, na, x, y, bx_, by_, nb)
        chains.append(chain)
    return chains


cdef void _fill(int[:, ::1] chain, int[::1] ax_, int[::1] ay_, Py_ssize_t na, int x, int y,
                int[::1] bx_, int[::1] by_, Py_ssize_t nb) noexcept:
    cdef Py_ssize_t j
    for j in range(na):
        chain[j, 0] = ax_[na - 1 - j]
        chain[j, 1] = ay_[na - 1 - j]
    chain[na, 0] = x
    chain[na, 1] = y
    for j in range(nb):
        chain[na + 1 + j, 0] = bx_[j]
        chain[na + 1 + j, 1] = by_[j]


def thin_chain(pts):
    cdef int[:, ::1] p = np.ascontiguousarray(pts, dtype=np.int32).reshape(-1, 2)
    cdef Py_ssize_t n = p.shape[0], i, k = 0
    out = np.empty((n, 2), dtype=np.int32)
    cdef int[:, ::1] o = out
    for i in range(n):
        o[k, 0] = p[i, 0]
        o[k, 1] = p[i, 1]
        k += 1
        while k >= 3 and abs(o[k - 3, 0] - o[k - 1, 0]) <= 1 and abs(o[k - 3, 1] - o[k - 1, 1]) <= 1:
            o[k - 2, 0] = o[k - 1, 0]
            o[k - 2, 1] = o[k - 1, 1]
            k -= 1
    return out[:k].copy()
