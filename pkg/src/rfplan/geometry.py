"""Free-space geometry for 2D polygonal and 3D box workspaces.

Two region kinds are supported:

* ``Region2D``: one or more simple polygons with holes. Containment is the
  closed even-odd rule over all rings, so boundary points are free.
* ``Region3D``: a closed axis-aligned bounding box minus open axis-aligned
  obstacle boxes.

``shrink`` erodes a free set by a ball of radius ``rho``. It is conservative:
the returned free set is always contained in the exact erosion, so a ball of
radius ``rho`` around any returned point lies inside the original free set.
"""
from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np
import shapely

from . import _kernels
from .errors import ContractViolation, EmptyFreeSpace

EPOCHS = ("free0", "free1", "free2")
CHORDS_PER_QUARTER = 8
MIN_AREA = 1e-12
# extra relative erosion absorbing round-off in the boolean overlay
OFFSET_REL_MARGIN = 1e-9
OFFSET_ABS_MARGIN = 1e-12


def _signed_area(ring):
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _as_ring(vertices, ccw):
    ring = np.array(vertices, dtype=float)
    if ring.ndim != 2 or ring.shape[1] != 2 or len(ring) < 3:
        raise ContractViolation("a ring needs at least three 2D vertices")
    if np.array_equal(ring[0], ring[-1]):
        ring = ring[:-1]
    if not np.all(np.isfinite(ring)):
        raise ContractViolation("ring vertices must be finite")
    if (_signed_area(ring) > 0) != ccw:
        ring = ring[::-1]
    return np.ascontiguousarray(ring)


@dataclass(frozen=True, eq=False)
class Polygon2D:
    """Simple polygon with holes; outer ring counter-clockwise, holes clockwise."""

    outer: np.ndarray
    holes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "outer", _as_ring(self.outer, ccw=True))
        object.__setattr__(self, "holes", tuple(_as_ring(h, ccw=False) for h in self.holes))
        shape = self.to_shapely()
        if not shape.is_valid:
            raise ContractViolation(f"invalid polygon: {shapely.is_valid_reason(shape)}")
        if shape.area < MIN_AREA:
            raise ContractViolation(f"degenerate polygon (area {shape.area:.3g})")

    def to_shapely(self):
        return shapely.Polygon(self.outer, [h for h in self.holes])

    def rings(self):
        return (self.outer,) + self.holes


@dataclass(frozen=True, eq=False)
class Region2D:
    """Union of disjoint polygons with holes."""

    polygons: tuple

    def __post_init__(self):
        polys = tuple(p if isinstance(p, Polygon2D) else Polygon2D(*p) for p in self.polygons)
        if not polys:
            raise ContractViolation("a 2D region needs at least one polygon")
        object.__setattr__(self, "polygons", polys)

    @classmethod
    def from_vertices(cls, outer, holes=()):
        return cls((Polygon2D(outer, tuple(holes)),))

    @classmethod
    def from_shapely(cls, geom):
        parts = []
        for poly in getattr(geom, "geoms", [geom]):
            if poly.geom_type != "Polygon" or poly.is_empty or poly.area < MIN_AREA:
                continue
            parts.append(Polygon2D(np.asarray(poly.exterior.coords),
                                   tuple(np.asarray(r.coords) for r in poly.interiors)))
        return cls(tuple(parts)) if parts else None

    def to_shapely(self):
        polys = [p.to_shapely() for p in self.polygons]
        return polys[0] if len(polys) == 1 else shapely.MultiPolygon(polys)

    @cached_property
    def packed_rings(self):
        rings = [r for p in self.polygons for r in p.rings()]
        verts = np.ascontiguousarray(np.concatenate(rings))
        offsets = np.zeros(len(rings) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([len(r) for r in rings])
        return verts, offsets

    @property
    def bbox(self):
        verts = self.packed_rings[0]
        return verts.min(axis=0), verts.max(axis=0)

    @property
    def volume(self):
        return float(sum(p.to_shapely().area for p in self.polygons))

    def to_dict(self):
        return {"polygons": [{"outer": p.outer.tolist(), "holes": [h.tolist() for h in p.holes]}
                             for p in self.polygons]}


@dataclass(frozen=True, eq=False)
class Region3D:
    """Closed box ``bounds`` minus open obstacle boxes; boxes are ``[x0, y0, z0, x1, y1, z1]``."""

    bounds: np.ndarray
    obstacles: np.ndarray = field(default_factory=lambda: np.zeros((0, 6)))

    def __post_init__(self):
        bounds = np.ascontiguousarray(np.asarray(self.bounds, dtype=float).reshape(6))
        boxes = np.ascontiguousarray(np.asarray(self.obstacles, dtype=float).reshape(-1, 6))
        for box in (bounds, *boxes):
            if not np.all(np.isfinite(box)) or not np.all(box[:3] < box[3:]):
                raise ContractViolation(f"box {box.tolist()} needs finite min < max per axis")
        for box in boxes:
            if not np.all((box[:3] < bounds[3:]) & (box[3:] > bounds[:3])):
                raise ContractViolation(f"obstacle {box.tolist()} does not intersect the bounds")
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "obstacles", boxes)

    @property
    def bbox(self):
        return self.bounds[:3].copy(), self.bounds[3:].copy()

    @property
    def volume(self):
        """Exact free volume by coordinate compression over all box faces."""
        lo, hi = self.bounds[:3], self.bounds[3:]
        clipped = np.concatenate([np.maximum(self.obstacles[:, :3], lo),
                                  np.minimum(self.obstacles[:, 3:], hi)], axis=1)
        edges = [np.unique(np.concatenate([[lo[d], hi[d]], clipped[:, d], clipped[:, d + 3]]))
                 for d in range(3)]
        centers = [(e[:-1] + e[1:]) / 2 for e in edges]
        widths = [np.diff(e) for e in edges]
        grid = np.stack(np.meshgrid(*centers, indexing="ij"), axis=-1).reshape(-1, 3)
        cell = np.einsum("i,j,k->ijk", *widths).reshape(-1)
        blocked = np.zeros(len(grid), dtype=bool)
        for box in clipped:
            blocked |= np.all((box[:3] < grid) & (grid < box[3:]), axis=1)
        return float(cell[~blocked].sum())

    def to_dict(self):
        return {"bounds": self.bounds.tolist(), "obstacles": self.obstacles.tolist()}


class Workspace:
    """A free set tagged with its epoch (``free0``, ``free1`` or ``free2``)."""

    def __init__(self, region, epoch="free1"):
        if epoch not in EPOCHS:
            raise ContractViolation(f"epoch must be one of {EPOCHS}, got {epoch!r}")
        if not isinstance(region, (Region2D, Region3D)):
            raise ContractViolation("region must be a Region2D or Region3D")
        self.region = region
        self.epoch = epoch

    def __repr__(self):
        return f"Workspace(dimension={self.dimension}, epoch={self.epoch!r})"

    @property
    def dimension(self):
        return 2 if isinstance(self.region, Region2D) else 3

    @property
    def bbox(self):
        return self.region.bbox

    @property
    def volume(self):
        return self.region.volume

    def _points(self, pts):
        pts = np.ascontiguousarray(np.asarray(pts, dtype=float))
        if pts.ndim != 2 or pts.shape[1] != self.dimension:
            raise ContractViolation(
                f"expected points of dimension {self.dimension}, got shape {pts.shape}")
        return pts

    def contains_many(self, pts):
        """Boolean mask of which rows of ``pts`` lie in the closed free set."""
        pts = self._points(pts)
        if self.dimension == 2:
            verts, offsets = self.region.packed_rings
            return _kernels.rings_contain(pts, verts, offsets)
        return _kernels.boxes_contain(pts, self.region.bounds, self.region.obstacles)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ContractViolation(f"point {x.tolist()} has wrong dimension for a "
                                    f"{self.dimension}D workspace")
        return bool(self.contains_many(x[None, :])[0])

    def segments_free_from(self, a, targets):
        """Mask of targets ``b`` whose closed segment from ``a`` stays free."""
        a = self._points(np.asarray(a, dtype=float)[None, :])[0]
        targets = self._points(targets)
        if self.dimension == 2:
            verts, offsets = self.region.packed_rings
            return _kernels.rings_segments_free(a, targets, verts, offsets)
        return _kernels.boxes_segments_free(a, targets, self.region.bounds,
                                            self.region.obstacles)

    def segment_free(self, a, b):
        return bool(self.segments_free_from(a, np.asarray(b, dtype=float)[None, :])[0])

    def to_dict(self):
        return {"dimension": self.dimension, "epoch": self.epoch, **self.region.to_dict()}

    @classmethod
    def from_dict(cls, doc):
        if doc["dimension"] == 2:
            region = Region2D(tuple(Polygon2D(p["outer"], tuple(p["holes"]))
                                    for p in doc["polygons"]))
        else:
            region = Region3D(doc["bounds"], doc["obstacles"])
        return cls(region, doc.get("epoch", "free1"))


def contains(w, x):
    return w.contains(x)


def segment_free(w, a, b):
    return w.segment_free(a, b)


def _cap(radius, k):
    n = 4 * k
    circum = radius / math.cos(math.pi / n)
    # half-step rotation puts flat sides (tangent to the disc) on the axes
    ang = 2 * math.pi * (np.arange(n) + 0.5) / n
    return circum * np.column_stack([np.cos(ang), np.sin(ang)])


def _erode_2d(region, rho, k):
    geom = region.to_shapely()
    lo, hi = region.bbox
    r = rho * (1 + OFFSET_REL_MARGIN) + OFFSET_ABS_MARGIN * float(np.max(hi - lo))
    verts, offsets = region.packed_rings
    starts, ends = [], []
    for i in range(len(offsets) - 1):
        ring = verts[offsets[i]:offsets[i + 1]]
        starts.append(ring)
        ends.append(np.roll(ring, -1, axis=0))
    p, q = np.concatenate(starts), np.concatenate(ends)
    d = q - p
    normal = r * np.column_stack([-d[:, 1], d[:, 0]]) / np.hypot(d[:, 0], d[:, 1])[:, None]
    # edge (+) ball = rectangle over the edge plus discs at both ends; the discs
    # are replaced by circumscribed polygons so the band only grows
    rects = shapely.polygons(np.stack([p + normal, q + normal, q - normal, p - normal], axis=1))
    caps = shapely.polygons(verts[:, None, :] + _cap(r, k))
    band = shapely.unary_union(np.concatenate([rects, caps]))
    eroded = Region2D.from_shapely(shapely.difference(geom, band))
    if eroded is None:
        raise EmptyFreeSpace(rho)
    return eroded


def _erode_3d(region, rho):
    lo, hi = region.bbox
    r = rho * (1 + OFFSET_REL_MARGIN) + OFFSET_ABS_MARGIN * float(np.max(hi - lo))
    bounds = np.concatenate([lo + r, hi - r])
    if not np.all(bounds[:3] < bounds[3:]):
        raise EmptyFreeSpace(rho)
    grown = region.obstacles + np.array([-r, -r, -r, r, r, r])
    keep = np.all((grown[:, :3] < bounds[3:]) & (grown[:, 3:] > bounds[:3]), axis=1)
    grown = grown[keep]
    if any(np.all(b[:3] < bounds[:3]) and np.all(b[3:] > bounds[3:]) for b in grown):
        raise EmptyFreeSpace(rho)
    return Region3D(bounds, grown)


def erode(w, rho, epoch, chords=CHORDS_PER_QUARTER):
    """Conservative erosion of ``w``'s free set by a ball of radius ``rho``."""
    if not rho >= 0 or not math.isfinite(rho):
        raise ContractViolation(f"rho must be finite and non-negative, got {rho}")
    if rho == 0:
        return Workspace(w.region, epoch)
    if w.dimension == 2:
        return Workspace(_erode_2d(w.region, rho, chords), epoch)
    return Workspace(_erode_3d(w.region, rho), epoch)


def shrink(w, rho, chords=CHORDS_PER_QUARTER):
    """Offset the boundary inward and obstacles outward by ``rho``.

    Returns the ``free2`` workspace. Arcs of the Minkowski sum are replaced by
    circumscribed polygons with ``chords`` segments per quarter circle, so the
    result never contains a point closer than ``rho`` to the ``free1`` set's
    complement.
    """
    if w.epoch != "free1":
        raise ContractViolation(f"shrink expects a free1 workspace, got {w.epoch}")
    return erode(w, rho, "free2", chords)


def free_space(boundary, obstacles=(), safety_distance=0.0, epoch="free1"):
    """Build a free set from a raw boundary and obstacles, inflated by a safety distance.

    In 2D ``boundary`` is a vertex list (or ``Polygon2D``) and ``obstacles``
    are vertex lists; in 3D both are ``[x0, y0, z0, x1, y1, z1]`` boxes.
    """
    boundary_arr = boundary if isinstance(boundary, Polygon2D) else np.asarray(boundary, dtype=float)
    if isinstance(boundary_arr, Polygon2D) or boundary_arr.ndim == 2:
        outer = boundary_arr if isinstance(boundary_arr, Polygon2D) else Polygon2D(boundary_arr)
        geom = outer.to_shapely()
        if len(obstacles):
            blocked = shapely.unary_union([Polygon2D(o).to_shapely() for o in obstacles])
            geom = shapely.difference(geom, blocked)
        region = Region2D.from_shapely(geom)
        if region is None:
            raise EmptyFreeSpace(0.0, "obstacles cover the whole boundary")
    else:
        region = Region3D(boundary_arr, np.asarray(obstacles, dtype=float).reshape(-1, 6))
    w = Workspace(region, epoch)
    if safety_distance:
        w = erode(w, float(safety_distance), epoch)
    return w


def area_fraction(w, bbox=None, n=10**6, seed=0):
    """Monte Carlo estimate of ``|free| / |bbox|`` and its standard error."""
    lo, hi = w.bbox if bbox is None else (np.asarray(bbox[0], float), np.asarray(bbox[1], float))
    wlo, whi = w.bbox
    if np.any(lo > wlo) or np.any(hi < whi):
        raise ContractViolation("bbox must contain the workspace")
    rng = np.random.Generator(np.random.Philox(seed))
    hits = 0
    done = 0
    while done < n:
        m = min(n - done, 1 << 18)
        pts = lo + (hi - lo) * rng.random((m, w.dimension))
        hits += int(w.contains_many(pts).sum())
        done += m
    frac = hits / n
    return frac, math.sqrt(frac * (1 - frac) / n)
