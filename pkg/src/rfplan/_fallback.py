"""Pure numpy implementations of the hot kernels in ``_core``.

Each function reproduces the compiled routine's arithmetic order exactly, so
switching backends never changes a result bit.
"""
import numpy as np

EVENT_TOL = 1e-9
MIN_GAP = 1e-12


def _ring_edges(verts, offsets):
    # edge k runs from prev[k] to cur[k], matching the compiled loop order
    prev = np.empty_like(verts)
    for r in range(len(offsets) - 1):
        start, stop = offsets[r], offsets[r + 1]
        prev[start] = verts[stop - 1]
        prev[start + 1:stop] = verts[start:stop - 1]
    return prev, verts


def rings_contain(pts, verts, offsets):
    pts = np.asarray(pts, dtype=float)
    px = pts[:, 0]
    py = pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    on_edge = np.zeros(len(pts), dtype=bool)
    prev, cur = _ring_edges(verts, offsets)
    with np.errstate(divide="ignore", invalid="ignore"):
        for (xj, yj), (xi, yi) in zip(prev, cur):
            box = ((min(yi, yj) <= py) & (py <= max(yi, yj))
                   & (min(xi, xj) <= px) & (px <= max(xi, xj)))
            if box.any():
                cross = (xj - xi) * (py - yi) - (yj - yi) * (px - xi)
                on_edge |= box & (cross == 0.0)
            straddle = (yi > py) != (yj > py)
            if straddle.any():
                xint = xi + (py - yi) * (xj - xi) / (yj - yi)
                inside ^= straddle & (px < xint)
    return inside | on_edge


def _segment_free_rings(a, b, verts, offsets, prev, cur):
    ax, ay = a
    bx, by = b
    ends = rings_contain(np.array([[ax, ay], [bx, by]]), verts, offsets)
    if not ends.all():
        return False
    rx = bx - ax
    ry = by - ay
    px, py = prev[:, 0], prev[:, 1]
    qx, qy = cur[:, 0], cur[:, 1]
    keep = ~((np.maximum(px, qx) < min(ax, bx)) | (np.minimum(px, qx) > max(ax, bx))
             | (np.maximum(py, qy) < min(ay, by)) | (np.minimum(py, qy) > max(ay, by)))
    if not keep.any():
        return True
    px, py, qx, qy = px[keep], py[keep], qx[keep], qy[keep]
    sx = qx - px
    sy = qy - py
    wx = px - ax
    wy = py - ay
    denom = rx * sy - ry * sx
    events = []
    with np.errstate(divide="ignore", invalid="ignore"):
        nz = denom != 0.0
        t = (wx * sy - wy * sx) / denom
        u = (wx * ry - wy * rx) / denom
        hit = (nz & (-EVENT_TOL <= t) & (t <= 1.0 + EVENT_TOL)
               & (-EVENT_TOL <= u) & (u <= 1.0 + EVENT_TOL))
        events.append(np.minimum(np.maximum(t[hit], 0.0), 1.0))
        rr = rx * rx + ry * ry
        collinear = ~nz & (wx * ry - wy * rx == 0.0)
        if rr != 0.0 and collinear.any():
            t0 = (wx * rx + wy * ry) / rr
            t1 = ((qx - ax) * rx + (qy - ay) * ry) / rr
            events.append(t0[collinear & (0.0 <= t0) & (t0 <= 1.0)])
            events.append(t1[collinear & (0.0 <= t1) & (t1 <= 1.0)])
    ts = np.sort(np.concatenate(events))
    if ts.size == 0:
        return True
    bounds = np.append(ts, 1.0)
    lows = np.insert(ts, 0, 0.0)
    gaps = bounds - lows > MIN_GAP
    mids = (lows[gaps] + bounds[gaps]) / 2.0
    probes = np.column_stack([ax + mids * rx, ay + mids * ry])
    return bool(rings_contain(probes, verts, offsets).all())


def rings_segments_free(a, targets, verts, offsets):
    a = np.asarray(a, dtype=float)
    prev, cur = _ring_edges(verts, offsets)
    out = np.empty(len(targets), dtype=bool)
    for k, b in enumerate(np.asarray(targets, dtype=float)):
        out[k] = _segment_free_rings(a, b, verts, offsets, prev, cur)
    return out


def boxes_contain(pts, bounds, boxes):
    pts = np.asarray(pts, dtype=float)
    ok = np.all((bounds[:3] <= pts) & (pts <= bounds[3:]), axis=1)
    for box in boxes:
        ok &= ~np.all((box[:3] < pts) & (pts < box[3:]), axis=1)
    return ok


def _segment_free_boxes(a, b, bounds, boxes):
    if not boxes_contain(np.array([a, b]), bounds, boxes).all():
        return False
    if len(boxes) == 0:
        return True
    dd = b - a
    lo = boxes[:, :3]
    hi = boxes[:, 3:]
    flat = dd == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ta = (lo - a) / dd
        tb = (hi - a) / dd
    first = np.where(flat, -np.inf, np.minimum(ta, tb))
    last = np.where(flat, np.inf, np.maximum(ta, tb))
    t0 = np.maximum(first.max(axis=1), 0.0)
    t1 = np.minimum(last.min(axis=1), 1.0)
    flat_miss = np.any(flat & ~((lo < a) & (a < hi)), axis=1)
    hit = ~flat_miss & (t0 < t1)
    return not hit.any()


def boxes_segments_free(a, targets, bounds, boxes):
    a = np.asarray(a, dtype=float)
    out = np.empty(len(targets), dtype=bool)
    for k, b in enumerate(np.asarray(targets, dtype=float)):
        out[k] = _segment_free_boxes(a, b, bounds, boxes)
    return out


def _sq_dist(nodes, count, q):
    diff = nodes[:count, 0] - q[0]
    dist = diff * diff
    for d in range(1, nodes.shape[1]):
        diff = nodes[:count, d] - q[d]
        dist = dist + diff * diff
    return dist


def nearest_index(nodes, count, q):
    return int(np.argmin(_sq_dist(nodes, count, q)))


def near_indices(nodes, count, q, radius):
    return np.flatnonzero(_sq_dist(nodes, count, q) <= radius * radius).astype(np.int64)
