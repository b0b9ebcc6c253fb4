# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.

Every function here has a numpy twin in ``_fallback`` that performs the same
floating point operations in the same order, so both backends return
bit-identical results.
"""
import numpy as np

from libc.stdlib cimport free, malloc

cdef double EVENT_TOL = 1e-9
cdef double MIN_GAP = 1e-12


cdef inline double _dmin(double a, double b) nogil:
    return a if a < b else b


cdef inline double _dmax(double a, double b) nogil:
    return a if a > b else b


cdef bint _in_rings(double px, double py, const double[:, ::1] verts,
                    const long long[::1] offsets) noexcept nogil:
    cdef Py_ssize_t r, i, j, start, stop
    cdef double xi, yi, xj, yj, cross, xint
    cdef bint inside = False
    for r in range(offsets.shape[0] - 1):
        start = offsets[r]
        stop = offsets[r + 1]
        j = stop - 1
        for i in range(start, stop):
            xi = verts[i, 0]
            yi = verts[i, 1]
            xj = verts[j, 0]
            yj = verts[j, 1]
            if _dmin(yi, yj) <= py <= _dmax(yi, yj) and _dmin(xi, xj) <= px <= _dmax(xi, xj):
                cross = (xj - xi) * (py - yi) - (yj - yi) * (px - xi)
                if cross == 0.0:
                    return True
            if (yi > py) != (yj > py):
                xint = xi + (py - yi) * (xj - xi) / (yj - yi)
                if px < xint:
                    inside = not inside
            j = i
    return inside


def rings_contain(const double[:, ::1] pts, const double[:, ::1] verts,
                  const long long[::1] offsets):
    """Closed even-odd containment of ``pts`` in the region bounded by the rings."""
    cdef Py_ssize_t n = pts.shape[0], k
    out = np.empty(n, dtype=np.uint8)
    cdef unsigned char[::1] res = out
    with nogil:
        for k in range(n):
            res[k] = _in_rings(pts[k, 0], pts[k, 1], verts, offsets)
    return out.view(bool)


cdef void _isort(double* a, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double v
    for i in range(1, n):
        v = a[i]
        j = i - 1
        while j >= 0 and a[j] > v:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = v


cdef bint _segment_free_rings(double ax, double ay, double bx, double by,
                              const double[:, ::1] verts, const long long[::1] offsets,
                              double* ts) noexcept nogil:
    cdef Py_ssize_t r, i, j, start, stop, nt = 0, k
    cdef double rx, ry, sx, sy, wx, wy, denom, t, u, rr, t0, t1
    cdef double px, py, qx, qy, smin_x, smax_x, smin_y, smax_y
    cdef double prev, cur, mid
    if not _in_rings(ax, ay, verts, offsets) or not _in_rings(bx, by, verts, offsets):
        return False
    rx = bx - ax
    ry = by - ay
    smin_x = _dmin(ax, bx)
    smax_x = _dmax(ax, bx)
    smin_y = _dmin(ay, by)
    smax_y = _dmax(ay, by)
    for r in range(offsets.shape[0] - 1):
        start = offsets[r]
        stop = offsets[r + 1]
        j = stop - 1
        for i in range(start, stop):
            px = verts[j, 0]
            py = verts[j, 1]
            qx = verts[i, 0]
            qy = verts[i, 1]
            j = i
            if _dmax(px, qx) < smin_x or _dmin(px, qx) > smax_x:
                continue
            if _dmax(py, qy) < smin_y or _dmin(py, qy) > smax_y:
                continue
            sx = qx - px
            sy = qy - py
            wx = px - ax
            wy = py - ay
            denom = rx * sy - ry * sx
            if denom != 0.0:
                t = (wx * sy - wy * sx) / denom
                u = (wx * ry - wy * rx) / denom
                if -EVENT_TOL <= t <= 1.0 + EVENT_TOL and -EVENT_TOL <= u <= 1.0 + EVENT_TOL:
                    ts[nt] = _dmin(_dmax(t, 0.0), 1.0)
                    nt += 1
            elif wx * ry - wy * rx == 0.0:
                rr = rx * rx + ry * ry
                if rr == 0.0:
                    continue
                t0 = (wx * rx + wy * ry) / rr
                t1 = ((qx - ax) * rx + (qy - ay) * ry) / rr
                if 0.0 <= t0 <= 1.0:
                    ts[nt] = t0
                    nt += 1
                if 0.0 <= t1 <= 1.0:
                    ts[nt] = t1
                    nt += 1
    if nt == 0:
        return True
    _isort(ts, nt)
    prev = 0.0
    for k in range(nt + 1):
        cur = ts[k] if k < nt else 1.0
        if cur - prev > MIN_GAP:
            mid = (prev + cur) / 2.0
            if not _in_rings(ax + mid * rx, ay + mid * ry, verts, offsets):
                return False
        prev = cur
    return True


def rings_segments_free(const double[::1] a, const double[:, ::1] targets,
                        const double[:, ::1] verts, const long long[::1] offsets):
    """For each target ``b``, whether the closed segment ``a``-``b`` stays in the region."""
    cdef Py_ssize_t n = targets.shape[0], k
    out = np.empty(n, dtype=np.uint8)
    cdef unsigned char[::1] res = out
    cdef double* ts = <double*> malloc((2 * verts.shape[0] + 2) * sizeof(double))
    if ts == NULL:
        raise MemoryError()
    try:
        with nogil:
            for k in range(n):
                res[k] = _segment_free_rings(a[0], a[1], targets[k, 0], targets[k, 1],
                                             verts, offsets, ts)
    finally:
        free(ts)
    return out.view(bool)


cdef bint _in_boxes(const double* x, const double[::1] bounds,
                    const double[:, ::1] boxes) noexcept nogil:
    cdef Py_ssize_t d, b
    cdef bint inside
    for d in range(3):
        if not (bounds[d] <= x[d] <= bounds[d + 3]):
            return False
    for b in range(boxes.shape[0]):
        inside = True
        for d in range(3):
            if not (boxes[b, d] < x[d] < boxes[b, d + 3]):
                inside = False
                break
        if inside:
            return False
    return True


def boxes_contain(const double[:, ::1] pts, const double[::1] bounds,
                  const double[:, ::1] boxes):
    """Closed box ``bounds`` minus the open interiors of ``boxes``."""
    cdef Py_ssize_t n = pts.shape[0], k
    out = np.empty(n, dtype=np.uint8)
    cdef unsigned char[::1] res = out
    with nogil:
        for k in range(n):
            res[k] = _in_boxes(&pts[k, 0], bounds, boxes)
    return out.view(bool)


cdef bint _segment_free_boxes(const double* a, const double* b, const double[::1] bounds,
                              const double[:, ::1] boxes) noexcept nogil:
    cdef Py_ssize_t d, k
    cdef double t0, t1, dd, ta, tb, tmp
    cdef bint miss
    if not _in_boxes(a, bounds, boxes) or not _in_boxes(b, bounds, boxes):
        return False
    for k in range(boxes.shape[0]):
        t0 = 0.0
        t1 = 1.0
        miss = False
        for d in range(3):
            dd = b[d] - a[d]
            if dd == 0.0:
                if not (boxes[k, d] < a[d] < boxes[k, d + 3]):
                    miss = True
                    break
            else:
                ta = (boxes[k, d] - a[d]) / dd
                tb = (boxes[k, d + 3] - a[d]) / dd
                if ta > tb:
                    tmp = ta
                    ta = tb
                    tb = tmp
                t0 = _dmax(t0, ta)
                t1 = _dmin(t1, tb)
                if t0 >= t1:
                    miss = True
                    break
        if not miss:
            return False
    return True


def boxes_segments_free(const double[::1] a, const double[:, ::1] targets,
                        const double[::1] bounds, const double[:, ::1] boxes):
    cdef Py_ssize_t n = targets.shape[0], k
    out = np.empty(n, dtype=np.uint8)
    cdef unsigned char[::1] res = out
    with nogil:
        for k in range(n):
            res[k] = _segment_free_boxes(&a[0], &targets[k, 0], bounds, boxes)
    return out.view(bool)


def nearest_index(const double[:, ::1] nodes, Py_ssize_t count, const double[::1] q):
    """Index of the first node with minimal squared distance to ``q``."""
    cdef Py_ssize_t i, d, p = nodes.shape[1], best = 0
    cdef double dist, diff, best_dist = 0.0
    with nogil:
        for i in range(count):
            diff = nodes[i, 0] - q[0]
            dist = diff * diff
            for d in range(1, p):
                diff = nodes[i, d] - q[d]
                dist = dist + diff * diff
            if i == 0 or dist < best_dist:
                best_dist = dist
                best = i
    return best


def near_indices(const double[:, ::1] nodes, Py_ssize_t count, const double[::1] q,
                 double radius):
    """Ascending indices of nodes with squared distance at most ``radius**2``."""
    cdef Py_ssize_t i, d, p = nodes.shape[1], m = 0
    cdef double dist, diff, r2 = radius * radius
    hits = np.empty(count, dtype=np.int64)
    cdef long long[::1] h = hits
    with nogil:
        for i in range(count):
            diff = nodes[i, 0] - q[0]
            dist = diff * diff
            for d in range(1, p):
                diff = nodes[i, d] - q[d]
                dist = dist + diff * diff
            if dist <= r2:
                h[m] = i
                m += 1
    return hits[:m]
