"""Planar geometry layer: polygonal domains with holes, connected segment
networks with an exact length functional, positive coefficient fields,
measure fitting on lattice cells and the periodic tiling construction.

Coordinates are in abstract length units; all tolerances below assume
O(1) domain diameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

GEOM_TOL = 1e-12     # point/segment coincidence tolerance
OVERLAP_TOL = 1e-9   # collinear-overlap detection (length dedup)

Point = tuple[float, float]


# ---------------------------------------------------------------------------
# segment / polygon primitives
# ---------------------------------------------------------------------------

def _cross(ox, oy, ax, ay, bx, by):
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def point_segment_distance(px, py, ax, ay, bx, by):
    """Distance from (px,py) to segment (a,b). Arguments may be arrays."""
    px, py = np.asarray(px, float), np.asarray(py, float)
    abx, aby = bx - ax, by - ay
    den = abx * abx + aby * aby
    if np.ndim(den) == 0 and den < GEOM_TOL**2:
        return np.hypot(px - ax, py - ay)
    t = ((px - ax) * abx + (py - ay) * aby) / np.where(den == 0, 1.0, den)
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(px - (ax + t * abx), py - (ay + t * aby))


def points_to_segments_distance(points, segs):
    """Min distance from each point to a set of segments.

    points: (N,2); segs: (M,4) rows (ax, ay, bx, by). Returns (N,) array.
    Chunked over segments to bound memory.
    """
    pts = np.asarray(points, float).reshape(-1, 2)
    segs = np.asarray(segs, float).reshape(-1, 4)
    if len(segs) == 0:
        return np.full(len(pts), np.inf)
    out = np.full(len(pts), np.inf)
    chunk = max(1, int(4e6 / max(len(pts), 1)))
    for k in range(0, len(segs), chunk):
        s = segs[k:k + chunk]
        d = point_segment_distance(
            pts[:, 0:1], pts[:, 1:2],
            s[None, :, 0], s[None, :, 1], s[None, :, 2], s[None, :, 3])
        np.minimum(out, d.min(axis=1), out=out)
    return out


def segment_segment_distance(a1, a2, b1, b2):
    """Min distance between two segments (0 if they cross or touch)."""
    d1 = _cross(a1[0], a1[1], a2[0], a2[1], b1[0], b1[1])
    d2 = _cross(a1[0], a1[1], a2[0], a2[1], b2[0], b2[1])
    d3 = _cross(b1[0], b1[1], b2[0], b2[1], a1[0], a1[1])
    d4 = _cross(b1[0], b1[1], b2[0], b2[1], a2[0], a2[1])
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 != d2 and d3 != d4:
        return 0.0
    cands = (
        point_segment_distance(b1[0], b1[1], a1[0], a1[1], a2[0], a2[1]),
        point_segment_distance(b2[0], b2[1], a1[0], a1[1], a2[0], a2[1]),
        point_segment_distance(a1[0], a1[1], b1[0], b1[1], b2[0], b2[1]),
        point_segment_distance(a2[0], a2[1], b1[0], b1[1], b2[0], b2[1]),
    )
    return float(min(cands))


def _segments_touch_batch(segs, i_idx, j_idx, tol):
    """Vectorized touch test: True where segments i and j come within tol."""
    A1, A2 = segs[i_idx, 0:2], segs[i_idx, 2:4]
    B1, B2 = segs[j_idx, 0:2], segs[j_idx, 2:4]

    def cr(o, a, b):
        return ((a[:, 0] - o[:, 0]) * (b[:, 1] - o[:, 1])
                - (a[:, 1] - o[:, 1]) * (b[:, 0] - o[:, 0]))

    d1, d2 = cr(A1, A2, B1), cr(A1, A2, B2)
    d3, d4 = cr(B1, B2, A1), cr(B1, B2, A2)
    crossing = ((d1 > 0) != (d2 > 0)) & ((d3 > 0) != (d4 > 0))

    def pseg(p, a, b):
        ab = b - a
        den = np.einsum('ij,ij->i', ab, ab)
        t = np.einsum('ij,ij->i', p - a, ab) / np.where(den == 0, 1.0, den)
        t = np.clip(t, 0.0, 1.0)
        c = a + t[:, None] * ab
        return np.hypot(p[:, 0] - c[:, 0], p[:, 1] - c[:, 1])

    d = np.minimum(np.minimum(pseg(B1, A1, A2), pseg(B2, A1, A2)),
                   np.minimum(pseg(A1, B1, B2), pseg(A2, B1, B2)))
    return crossing | (d <= tol)


def segment_intersection_params(a1, a2, b1, b2):
    """Parameters (t, u) of the crossing of lines a and b, or None if parallel."""
    r = (a2[0] - a1[0], a2[1] - a1[1])
    s = (b2[0] - b1[0], b2[1] - b1[1])
    den = r[0] * s[1] - r[1] * s[0]
    if abs(den) < GEOM_TOL:
        return None
    qp = (b1[0] - a1[0], b1[1] - a1[1])
    t = (qp[0] * s[1] - qp[1] * s[0]) / den
    u = (qp[0] * r[1] - qp[1] * r[0]) / den
    return t, u


def polygon_signed_area(verts):
    v = np.asarray(verts, float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_centroid(verts):
    v = np.asarray(verts, float)
    x, y = v[:, 0], v[:, 1]
    xr, yr = np.roll(x, -1), np.roll(y, -1)
    cross = x * yr - xr * y
    a = 0.5 * cross.sum()
    if abs(a) < 1e-300:
        return float(x.mean()), float(y.mean())
    cx = float(((x + xr) * cross).sum() / (6 * a))
    cy = float(((y + yr) * cross).sum() / (6 * a))
    return cx, cy


def polygon_is_simple(verts):
    """Reject self-intersections; adjacent edges may only share endpoints."""
    n = len(verts)
    if n < 3:
        return False
    edges = [(verts[i], verts[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        a1, a2 = edges[i]
        if math.hypot(a2[0] - a1[0], a2[1] - a1[1]) < GEOM_TOL:
            return False
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b1, b2 = edges[j]
            if segment_segment_distance(a1, a2, b1, b2) < GEOM_TOL:
                return False
    return True


def points_in_polygon(points, verts, tol=GEOM_TOL):
    """Crossing-number membership for the closed polygon (boundary counts in)."""
    pts = np.asarray(points, float).reshape(-1, 2)
    v = np.asarray(verts, float)
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), bool)
    n = len(v)
    for i in range(n):
        x1, y1 = v[i]
        x2, y2 = v[(i + 1) % n]
        cond = (y1 > y) != (y2 > y)
        with np.errstate(divide='ignore', invalid='ignore'):
            xin = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= cond & (x < np.where(cond, xin, np.inf))
    segs = np.column_stack([v, np.roll(v, -1, axis=0)])
    on_bdry = points_to_segments_distance(pts, segs) <= tol
    return inside | on_bdry


def clip_polygon_to_box(verts, xlo, ylo, xhi, yhi):
    """Sutherland-Hodgman clip of a polygon against an axis box.

    Works for non-convex subjects: degenerate bridge edges may appear but
    carry zero area, so area/centroid stay correct.
    """
    def clip_dir(poly, inside, intersect):
        out = []
        n = len(poly)
        for i in range(n):
            cur, nxt = poly[i], poly[(i + 1) % n]
            cin, nin = inside(cur), inside(nxt)
            if cin:
                out.append(cur)
                if not nin:
                    out.append(intersect(cur, nxt))
            elif nin:
                out.append(intersect(cur, nxt))
        return out

    def ix_x(c, n, xv):
        t = (xv - c[0]) / (n[0] - c[0])
        return (xv, c[1] + t * (n[1] - c[1]))

    def ix_y(c, n, yv):
        t = (yv - c[1]) / (n[1] - c[1])
        return (c[0] + t * (n[0] - c[0]), yv)

    poly = [tuple(p) for p in verts]
    for inside, intersect in (
            (lambda p: p[0] >= xlo, lambda c, n: ix_x(c, n, xlo)),
            (lambda p: p[0] <= xhi, lambda c, n: ix_x(c, n, xhi)),
            (lambda p: p[1] >= ylo, lambda c, n: ix_y(c, n, ylo)),
            (lambda p: p[1] <= yhi, lambda c, n: ix_y(c, n, yhi))):
        if not poly:
            return []
        poly = clip_dir(poly, inside, intersect)
    return poly


# ---------------------------------------------------------------------------
# Domain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Domain:
    """Bounded polygonal domain: one outer loop, optional hole loops.

    The outer loop is stored counter-clockwise and holes clockwise;
    orientations are normalized at construction. The boundary has
    1 + len(holes) connected components.
    """

    outer: tuple[Point, ...]
    holes: tuple[tuple[Point, ...], ...] = ()

    def __post_init__(self):
        outer = tuple((float(x), float(y)) for x, y in self.outer)
        if len(outer) < 3 or not polygon_is_simple(outer):
            raise ValueError("outer boundary must be a simple polygon")
        if polygon_signed_area(outer) < 0:
            outer = outer[::-1]
        holes = []
        for h in self.holes:
            h = tuple((float(x), float(y)) for x, y in h)
            if len(h) < 3 or not polygon_is_simple(h):
                raise ValueError("hole must be a simple polygon")
            if polygon_signed_area(h) > 0:
                h = h[::-1]
            holes.append(h)
        object.__setattr__(self, 'outer', outer)
        object.__setattr__(self, 'holes', tuple(holes))
        for h in self.holes:
            if not bool(np.all(points_in_polygon(h, self.outer, -GEOM_TOL))):
                raise ValueError("hole must lie strictly inside the outer polygon")
        for i, h in enumerate(self.holes):
            for g in self.holes[i + 1:]:
                for a in range(len(h)):
                    b1, b2 = h[a], h[(a + 1) % len(h)]
                    for c in range(len(g)):
                        if segment_segment_distance(b1, b2, g[c], g[(c + 1) % len(g)]) < GEOM_TOL:
                            raise ValueError("holes must be pairwise disjoint")
        if self.area <= GEOM_TOL:
            raise ValueError("domain area must be positive")

    @classmethod
    def unit_square(cls):
        return cls(((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)))

    @classmethod
    def box(cls, xlo, ylo, xhi, yhi):
        return cls(((xlo, ylo), (xhi, ylo), (xhi, yhi), (xlo, yhi)))

    @cached_property
    def area(self) -> float:
        a = polygon_signed_area(self.outer)
        for h in self.holes:
            a += polygon_signed_area(h)  # holes are clockwise, negative area
        return float(a)

    @cached_property
    def perimeter(self) -> float:
        total = 0.0
        for loop in (self.outer, *self.holes):
            v = np.asarray(loop)
            total += float(np.hypot(*(np.roll(v, -1, axis=0) - v).T).sum())
        return total

    @property
    def boundary_component_count(self) -> int:
        return 1 + len(self.holes)

    @cached_property
    def boundary_segments(self) -> np.ndarray:
        rows = []
        for loop in (self.outer, *self.holes):
            v = np.asarray(loop)
            w = np.roll(v, -1, axis=0)
            rows.append(np.column_stack([v, w]))
        return np.vstack(rows)

    @cached_property
    def bbox(self) -> tuple[float, float, float, float]:
        v = np.asarray(self.outer)
        return (float(v[:, 0].min()), float(v[:, 1].min()),
                float(v[:, 0].max()), float(v[:, 1].max()))

    def contains(self, points, tol=GEOM_TOL):
        """Membership in the closed domain (holes removed, boundaries kept)."""
        pts = np.asarray(points, float).reshape(-1, 2)
        ok = points_in_polygon(pts, self.outer, tol)
        for h in self.holes:
            in_hole = points_in_polygon(pts, h, -tol)
            hsegs = np.column_stack([np.asarray(h), np.roll(np.asarray(h), -1, axis=0)])
            on_h = points_to_segments_distance(pts, hsegs) <= tol
            ok &= ~(in_hole & ~on_h)
        return ok

    def contains_point(self, x, y, tol=GEOM_TOL) -> bool:
        return bool(self.contains([(x, y)], tol)[0])

    def distance_to_boundary(self, points):
        return points_to_segments_distance(points, self.boundary_segments)

    def clipped_cell_area(self, xlo, ylo, xhi, yhi) -> float:
        """Area of (domain intersect axis cell)."""
        poly = clip_polygon_to_box(self.outer, xlo, ylo, xhi, yhi)
        if not poly:
            return 0.0
        a = abs(polygon_signed_area(poly))
        for h in self.holes:
            hp = clip_polygon_to_box(h[::-1], xlo, ylo, xhi, yhi)
            if hp:
                a -= abs(polygon_signed_area(hp))
        return max(a, 0.0)

    def clipped_cell_area_centroid(self, xlo, ylo, xhi, yhi):
        """(area, centroid) of the clipped cell; centroid is None for empty."""
        poly = clip_polygon_to_box(self.outer, xlo, ylo, xhi, yhi)
        if not poly:
            return 0.0, None
        a = abs(polygon_signed_area(poly))
        cx, cy = polygon_centroid(poly if polygon_signed_area(poly) > 0 else poly[::-1])
        sx, sy = a * cx, a * cy
        for h in self.holes:
            hp = clip_polygon_to_box(h[::-1], xlo, ylo, xhi, yhi)
            if hp:
                ha = abs(polygon_signed_area(hp))
                hx, hy = polygon_centroid(hp if polygon_signed_area(hp) > 0 else hp[::-1])
                a -= ha
                sx -= ha * hx
                sy -= ha * hy
        if a <= 0:
            return 0.0, None
        return a, (sx / a, sy / a)


# ---------------------------------------------------------------------------
# SigmaNetwork
# ---------------------------------------------------------------------------

class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class SigmaNetwork:
    """Connected planar segment network; a single vertex with no edges is the
    admissible degenerate point network."""

    vertices: tuple[Point, ...]
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        edges = tuple((int(i), int(j)) for i, j in self.edges)
        object.__setattr__(self, 'vertices', verts)
        object.__setattr__(self, 'edges', edges)
        if not verts:
            raise NetworkError("network must be non-empty")
        for i, j in edges:
            if not (0 <= i < len(verts)) or not (0 <= j < len(verts)):
                raise NetworkError("edge index out of range")
            if i == j:
                raise NetworkError("degenerate edge")
        if self._edge_lengths.size and self._edge_lengths.min() < GEOM_TOL:
            raise NetworkError("zero-length edge")
        self._check_no_overlap()
        if not self.is_connected():
            raise NetworkError("network must be connected")

    @cached_property
    def _verts(self) -> np.ndarray:
        return np.asarray(self.vertices, float)

    @cached_property
    def segments(self) -> np.ndarray:
        """(M,4) array of edge endpoint coordinates."""
        if not self.edges:
            return np.zeros((0, 4))
        e = np.asarray(self.edges, int)
        return np.column_stack([self._verts[e[:, 0]], self._verts[e[:, 1]]])

    @cached_property
    def _edge_lengths(self) -> np.ndarray:
        s = self.segments
        if not len(s):
            return np.zeros(0)
        return np.hypot(s[:, 2] - s[:, 0], s[:, 3] - s[:, 1])

    @property
    def length(self) -> float:
        """Total length, each geometric segment counted once."""
        return float(self._edge_lengths.sum())

    def _candidate_pairs(self):
        """Spatially hashed candidate edge pairs (bounding boxes may interact)."""
        segs = self.segments
        m = len(segs)
        if m < 2:
            return np.zeros(0, int), np.zeros(0, int)
        if m <= 256:
            iu = np.triu_indices(m, 1)
            return iu[0], iu[1]
        lens = self._edge_lengths
        cell = max(float(np.median(lens)), 1e-6)
        buckets: dict[tuple[int, int], list[int]] = {}
        for k in range(m):
            x1, y1, x2, y2 = segs[k]
            ix0, ix1 = sorted((int(math.floor(min(x1, x2) / cell)),
                               int(math.floor(max(x1, x2) / cell))))
            iy0, iy1 = sorted((int(math.floor(min(y1, y2) / cell)),
                               int(math.floor(max(y1, y2) / cell))))
            for ix in range(ix0, ix1 + 1):
                for iy in range(iy0, iy1 + 1):
                    buckets.setdefault((ix, iy), []).append(k)
        pairs = set()
        for members in buckets.values():
            for a in range(len(members)):
                for b in range(a + 1, len(members)):
                    i, j = members[a], members[b]
                    pairs.add((i, j) if i < j else (j, i))
        if not pairs:
            return np.zeros(0, int), np.zeros(0, int)
        arr = np.asarray(sorted(pairs), int)
        return arr[:, 0], arr[:, 1]

    def _check_no_overlap(self):
        """Collinear edges with positive-length overlap are forbidden."""
        segs = self.segments
        ii, jj = self._candidate_pairs()
        if not len(ii):
            return
        d1 = segs[:, 2:4] - segs[:, 0:2]
        cr = d1[ii, 0] * d1[jj, 1] - d1[ii, 1] * d1[jj, 0]
        off = segs[jj, 0:2] - segs[ii, 0:2]
        cr2 = d1[ii, 0] * off[:, 1] - d1[ii, 1] * off[:, 0]
        col = (np.abs(cr) <= OVERLAP_TOL) & (np.abs(cr2) <= OVERLAP_TOL)
        if not col.any():
            return
        for i, j in zip(ii[col], jj[col]):
            a, b = segs[i, 0:2], segs[i, 2:4]
            ab = b - a
            den = float(ab @ ab)
            t1 = float((segs[j, 0:2] - a) @ ab) / den
            t2 = float((segs[j, 2:4] - a) @ ab) / den
            lo, hi = max(0.0, min(t1, t2)), min(1.0, max(t1, t2))
            if (hi - lo) * math.sqrt(den) > OVERLAP_TOL:
                raise NetworkError(f"overlapping collinear edges {i} and {j}")

    def is_connected(self) -> bool:
        """One component, with geometric crossings/touches acting as joints."""
        n = len(self.vertices)
        parent = list(range(n + len(self.edges)))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb

        for k, (i, j) in enumerate(self.edges):
            union(i, j)
            union(i, n + k)
        if self.edges:
            ii, jj = self._candidate_pairs()
            if len(ii):
                touch = _segments_touch_batch(self.segments, ii, jj, GEOM_TOL)
                for i, j in zip(ii[touch], jj[touch]):
                    union(n + int(i), n + int(j))
        used = set()
        for i, j in self.edges:
            used.add(i)
            used.add(j)
        roots = {find(v) for v in range(n)}
        return len(roots) == 1

    def translated(self, dx, dy) -> "SigmaNetwork":
        return SigmaNetwork(tuple((x + dx, y + dy) for x, y in self.vertices), self.edges)

    def scaled(self, factor) -> "SigmaNetwork":
        return SigmaNetwork(tuple((x * factor, y * factor) for x, y in self.vertices), self.edges)


def network_length(sigma: SigmaNetwork) -> float:
    """Total length of the network (zero for a single point)."""
    return sigma.length


def is_connected(sigma: SigmaNetwork) -> bool:
    return sigma.is_connected()


def distance_to_set(x, sigma: SigmaNetwork, domain: Domain) -> float:
    """Distance from point x to (network union domain boundary), exact."""
    return float(distance_to_network([x], sigma, domain)[0])


def distance_to_network(points, sigma: SigmaNetwork | None, domain: Domain | None):
    """Vectorized distance to (network union domain boundary)."""
    pts = np.asarray(points, float).reshape(-1, 2)
    d = np.full(len(pts), np.inf)
    if sigma is not None:
        if len(sigma.segments):
            d = np.minimum(d, points_to_segments_distance(pts, sigma.segments))
        deg = set(range(len(sigma.vertices)))
        for i, j in sigma.edges:
            deg.discard(i)
            deg.discard(j)
        if deg:
            iso = sigma._verts[sorted(deg)]
            dv = np.hypot(pts[:, 0:1] - iso[None, :, 0], pts[:, 1:2] - iso[None, :, 1])
            d = np.minimum(d, dv.min(axis=1))
    if domain is not None:
        d = np.minimum(d, domain.distance_to_boundary(pts))
    return d


# ---------------------------------------------------------------------------
# explicit configurations
# ---------------------------------------------------------------------------

def build_comb(n: int) -> SigmaNetwork:
    """n+1 equispaced unit vertical teeth on [0,1]^2 joined by the lower base."""
    if n < 1:
        raise ValueError("n must be >= 1")
    verts = []
    edges = []
    for j in range(n + 1):
        verts.append((j / n, 0.0))
    for j in range(n + 1):
        verts.append((j / n, 1.0))
    for j in range(n):
        edges.append((j, j + 1))                 # base pieces
    for j in range(n + 1):
        edges.append((j, n + 1 + j))             # teeth
    return SigmaNetwork(tuple(verts), tuple(edges))


def build_grid_structure(n: int) -> SigmaNetwork:
    """(n+1)+(n+1) full horizontal/vertical unit lines on [0,1]^2."""
    if n < 1:
        raise ValueError("n must be >= 1")
    verts = [(i / n, j / n) for j in range(n + 1) for i in range(n + 1)]

    def vid(i, j):
        return j * (n + 1) + i

    edges = []
    for j in range(n + 1):
        for i in range(n):
            edges.append((vid(i, j), vid(i + 1, j)))
    for i in range(n + 1):
        for j in range(n):
            edges.append((vid(i, j), vid(i, j + 1)))
    return SigmaNetwork(tuple(verts), tuple(edges))


def _unit_square_sides():
    return (((0.0, 0.0), (1.0, 0.0)), ((1.0, 0.0), (1.0, 1.0)),
            ((1.0, 1.0), (0.0, 1.0)), ((0.0, 1.0), (0.0, 0.0)))


def _clip_chord_to_box(c, nrm, dirv, xlo=0.0, ylo=0.0, xhi=1.0, yhi=1.0):
    """Segment (line {x.nrm=c}) clipped to the box, or None."""
    p0 = (c * nrm[0], c * nrm[1])
    hits = []
    corners = ((xlo, ylo), (xhi, ylo), (xhi, yhi), (xlo, yhi))
    for k in range(4):
        a, b = corners[k], corners[(k + 1) % 4]
        res = segment_intersection_params(p0, (p0[0] + dirv[0], p0[1] + dirv[1]), a, b)
        if res is None:
            continue
        t, u = res
        if -GEOM_TOL <= u <= 1 + GEOM_TOL:
            hits.append(t)
    for corner in corners:
        if abs((corner[0] * nrm[0] + corner[1] * nrm[1]) - c) <= GEOM_TOL:
            hits.append((corner[0] - p0[0]) * dirv[0] + (corner[1] - p0[1]) * dirv[1])
    if len(hits) < 2:
        return None
    t0, t1 = min(hits), max(hits)
    if t1 - t0 < GEOM_TOL:
        return None
    a = (p0[0] + t0 * dirv[0], p0[1] + t0 * dirv[1])
    b = (p0[0] + t1 * dirv[0], p0[1] + t1 * dirv[1])
    clamp = lambda v: min(max(v, 0.0), 1.0)
    return ((clamp(a[0]), clamp(a[1])), (clamp(b[0]), clamp(b[1])))


def build_oblique_comb(n: int, angle: float) -> SigmaNetwork:
    """Parallel chords of direction `angle`, spaced 1/n along the normal,
    clipped to [0,1]^2, plus the full square boundary."""
    if n < 1:
        raise ValueError("n must be >= 1")
    dirv = (math.cos(angle), math.sin(angle))
    nrm = (-math.sin(angle), math.cos(angle))
    projections = [cx * nrm[0] + cy * nrm[1]
                   for cx, cy in ((0, 0), (1, 0), (1, 1), (0, 1))]
    cmin, cmax = min(projections), max(projections)
    chords = []
    k0 = math.ceil((cmin - GEOM_TOL) * n)
    k1 = math.floor((cmax + GEOM_TOL) * n)
    for k in range(k0, k1 + 1):
        seg = _clip_chord_to_box(k / n, nrm, dirv)
        if seg is None:
            continue
        mid = ((seg[0][0] + seg[1][0]) / 2, (seg[0][1] + seg[1][1]) / 2)
        on_side = any(point_segment_distance(mid[0], mid[1], a[0], a[1], b[0], b[1]) <= GEOM_TOL
                      for a, b in _unit_square_sides())
        if on_side:
            continue  # boundary already carries this chord
        chords.append(seg)
    verts: list[Point] = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    edges = [(0, 1), (1, 2), (2, 3), (3, 0)]
    for a, b in chords:
        verts.append(a)
        verts.append(b)
        edges.append((len(verts) - 2, len(verts) - 1))
    return SigmaNetwork(tuple(verts), tuple(edges))


# ---------------------------------------------------------------------------
# coefficient fields
# ---------------------------------------------------------------------------

_FIELD_ARITY = {'constant': 1, 'affine': 3, 'radialq': 4, 'exp': 2, 'affinesq': 3}


@dataclass(frozen=True)
class CoefficientField:
    """Strictly positive scalar field from a small closed-form family.

    kinds: constant c | affine a+b*x+c*y | radialq a+b*|x-x0|^2 |
    exp a*exp(b*x) | affinesq (a+b*x+c*y)^2
    """

    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in _FIELD_ARITY:
            raise ValueError(f"unknown field kind {self.kind!r}")
        params = tuple(float(p) for p in self.params)
        if len(params) != _FIELD_ARITY[self.kind]:
            raise ValueError(f"{self.kind} expects {_FIELD_ARITY[self.kind]} parameters")
        object.__setattr__(self, 'params', params)

    @classmethod
    def constant(cls, c=1.0):
        return cls('constant', (c,))

    @classmethod
    def affine(cls, a, b, c):
        return cls('affine', (a, b, c))

    @classmethod
    def radial_quadratic(cls, a, b, x0, y0):
        return cls('radialq', (a, b, x0, y0))

    @classmethod
    def exponential(cls, a, b):
        return cls('exp', (a, b))

    @classmethod
    def affine_squared(cls, a, b, c):
        return cls('affinesq', (a, b, c))

    def __call__(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        p = self.params
        if self.kind == 'constant':
            return np.broadcast_to(p[0], np.broadcast(x, y).shape).copy()
        if self.kind == 'affine':
            return p[0] + p[1] * x + p[2] * y
        if self.kind == 'radialq':
            return p[0] + p[1] * ((x - p[2]) ** 2 + (y - p[3]) ** 2)
        if self.kind == 'exp':
            return p[0] * np.exp(p[1] * x)
        return (p[0] + p[1] * x + p[2] * y) ** 2

    def bounds_on(self, bbox):
        """Exact (min, max) over the closed box via the closed form."""
        xlo, ylo, xhi, yhi = bbox
        p = self.params
        if self.kind == 'constant':
            return p[0], p[0]
        corners = [(xlo, ylo), (xhi, ylo), (xhi, yhi), (xlo, yhi)]
        if self.kind in ('affine', 'affinesq'):
            vals = [p[0] + p[1] * x + p[2] * y for x, y in corners]
            if self.kind == 'affine':
                return min(vals), max(vals)
            if min(vals) < 0 < max(vals) or any(abs(v) < GEOM_TOL for v in vals):
                return 0.0, max(v * v for v in vals)
            return min(v * v for v in vals), max(v * v for v in vals)
        if self.kind == 'exp':
            lo, hi = p[0] * math.exp(p[1] * xlo), p[0] * math.exp(p[1] * xhi)
            return min(lo, hi), max(lo, hi)
        x0, y0 = p[2], p[3]
        cx = min(max(x0, xlo), xhi)
        cy = min(max(y0, ylo), yhi)
        r2min = (cx - x0) ** 2 + (cy - y0) ** 2
        r2max = max((x - x0) ** 2 + (y - y0) ** 2 for x, y in corners)
        lo, hi = p[0] + p[1] * r2min, p[0] + p[1] * r2max
        return (min(lo, hi), max(lo, hi))

    def check_positive(self, bbox):
        lo, _ = self.bounds_on(bbox)
        if lo <= 0:
            raise ValueError(f"field {self.kind}{self.params} is not strictly "
                             f"positive on the box {bbox}")
        return self


# ---------------------------------------------------------------------------
# fitted measures and the tiling construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FittedCell:
    ix: int
    iy: int
    weight: float       # constant density value alpha_i on the clipped cell
    clipped_area: float


@dataclass(frozen=True)
class FittedMeasure:
    """Piecewise-constant probability density on lattice cells of side s."""

    cell_side: float
    cells: tuple[FittedCell, ...]

    def __post_init__(self):
        total = sum(c.weight * c.clipped_area for c in self.cells)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"fitted measure must normalize to 1, got {total}")

    @property
    def total_mass(self) -> float:
        return sum(c.weight * c.clipped_area for c in self.cells)

    def cell_box(self, cell: FittedCell):
        s = self.cell_side
        return (cell.ix * s, cell.iy * s, (cell.ix + 1) * s, (cell.iy + 1) * s)


def fit_measure_to_grid(f, cell_side: float, domain: Domain, subdiv: int = 16) -> FittedMeasure:
    """Sample a unit-mass density onto lattice cells of side `cell_side`.

    Cell weights are the exact cell averages of f (quadrature with `subdiv`^2
    sub-cells, exact for affine densities), rescaled so that the weighted
    clipped areas sum to one.
    """
    if cell_side <= 0:
        raise ValueError("cell side must be positive")
    s = float(cell_side)
    xlo, ylo, xhi, yhi = domain.bbox
    ix0, ix1 = math.floor(xlo / s + GEOM_TOL), math.ceil(xhi / s - GEOM_TOL)
    iy0, iy1 = math.floor(ylo / s + GEOM_TOL), math.ceil(yhi / s - GEOM_TOL)
    raw = []
    for ix in range(ix0, ix1):
        for iy in range(iy0, iy1):
            cx0, cy0 = ix * s, iy * s
            area = domain.clipped_cell_area(cx0, cy0, cx0 + s, cy0 + s)
            if area <= GEOM_TOL * s * s:
                continue  # zero clipped area: cell dropped
            mass = 0.0
            step = s / subdiv
            for a in range(subdiv):
                for b in range(subdiv):
                    sa, sc = domain.clipped_cell_area_centroid(
                        cx0 + a * step, cy0 + b * step,
                        cx0 + (a + 1) * step, cy0 + (b + 1) * step)
                    if sa > 0 and sc is not None:
                        val = float(np.asarray(f(sc[0], sc[1])).reshape(-1)[0])
                        if val < -1e-9:
                            raise ValueError("density must be non-negative")
                        mass += sa * max(val, 0.0)
            raw.append((ix, iy, mass, area))
    total = sum(m for _, _, m, _ in raw)
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"density must integrate to 1 over the domain, got {total:.8f}")
    cells = tuple(FittedCell(ix, iy, (m / a) / total, a) for ix, iy, m, a in raw)
    return FittedMeasure(s, cells)


def unit_tile(inner_verticals: int = 1) -> SigmaNetwork:
    """Unit-square boundary plus equispaced interior vertical bars, the
    basic repeatable tile for the chalkboard construction."""
    verts: list[Point] = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    edges = [(0, 1), (1, 2), (2, 3), (3, 0)]
    k = inner_verticals + 1
    for j in range(1, inner_verticals + 1):
        x = j / k
        verts.append((x, 0.0))
        verts.append((x, 1.0))
        edges.append((len(verts) - 2, len(verts) - 1))
    return SigmaNetwork(tuple(verts), tuple(edges))


def _edge_on_line(seg, axis, value, tol=GEOM_TOL):
    """True if the whole segment lies on the line {x=value} or {y=value}."""
    i = 0 if axis == 'x' else 1
    return abs(seg[i] - value) <= tol and abs(seg[i + 2] - value) <= tol


def _tile_side_cover(tile: SigmaNetwork):
    """Check every unit-square side is covered by tile edges; also split
    the edges into boundary part and interior part."""
    segs = tile.segments
    sides = (('y', 0.0), ('x', 1.0), ('y', 1.0), ('x', 0.0))
    on_boundary = np.zeros(len(segs), bool)
    for axis, val in sides:
        ivals = []
        j = 1 if axis == 'x' else 0  # coordinate running along the side
        for k, seg in enumerate(segs):
            if _edge_on_line(seg, axis, val):
                on_boundary[k] = True
                ivals.append(tuple(sorted((seg[j], seg[j + 2]))))
        covered = _merged_length(ivals)
        if covered < 1.0 - 1e-9:
            raise ValueError("tile must contain the unit square boundary")
    return on_boundary


def _merged_length(intervals):
    if not intervals:
        return 0.0
    ivs = sorted(intervals)
    total, lo, hi = 0.0, ivs[0][0], ivs[0][1]
    for a, b in ivs[1:]:
        if a > hi:
            total += hi - lo
            lo, hi = a, b
        else:
            hi = max(hi, b)
    return total + (hi - lo)


def _merge_intervals(intervals, tol=GEOM_TOL):
    out = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1] + tol:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [(a, b) for a, b in out if b - a > tol]


def tile_effective_length(tile: SigmaNetwork) -> float:
    """Length of the tile inside the half-open unit square [0,1)^2."""
    _tile_side_cover(tile)
    total = tile.length
    for seg in tile.segments:
        if _edge_on_line(seg, 'x', 1.0) or _edge_on_line(seg, 'y', 1.0):
            total -= math.hypot(seg[2] - seg[0], seg[3] - seg[1])
    return total


def _segment_domain_intervals(a, b, domain: Domain):
    """Parameter intervals of segment [a,b] lying in the closed domain."""
    ts = [0.0, 1.0]
    for seg in domain.boundary_segments:
        res = segment_intersection_params(a, b, (seg[0], seg[1]), (seg[2], seg[3]))
        if res is None:
            continue
        t, u = res
        if -GEOM_TOL <= t <= 1 + GEOM_TOL and -GEOM_TOL <= u <= 1 + GEOM_TOL:
            ts.append(min(max(t, 0.0), 1.0))
    ts = sorted(set(ts))
    keep = []
    for t0, t1 in zip(ts[:-1], ts[1:]):
        if t1 - t0 < GEOM_TOL:
            continue
        tm = (t0 + t1) / 2
        mx, my = a[0] + tm * (b[0] - a[0]), a[1] + tm * (b[1] - a[1])
        if domain.contains_point(mx, my):
            keep.append((t0, t1))
    return _merge_intervals(keep)


def _subtract_boundary_overlap(a, b, domain: Domain, tol=OVERLAP_TOL):
    """Parameter intervals of [a,b] NOT lying along a boundary edge."""
    ab = (b[0] - a[0], b[1] - a[1])
    L = math.hypot(*ab)
    if L < GEOM_TOL:
        return []
    remove = []
    for seg in domain.boundary_segments:
        c, d = (seg[0], seg[1]), (seg[2], seg[3])
        cd = (d[0] - c[0], d[1] - c[1])
        if abs(ab[0] * cd[1] - ab[1] * cd[0]) > tol:
            continue
        if point_segment_distance(a[0], a[1], c[0], c[1], d[0], d[1]) > tol and \
           point_segment_distance(b[0], b[1], c[0], c[1], d[0], d[1]) > tol:
            mid = ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
            if point_segment_distance(mid[0], mid[1], c[0], c[1], d[0], d[1]) > tol:
                continue
        t1 = ((c[0] - a[0]) * ab[0] + (c[1] - a[1]) * ab[1]) / (L * L)
        t2 = ((d[0] - a[0]) * ab[0] + (d[1] - a[1]) * ab[1]) / (L * L)
        lo, hi = max(0.0, min(t1, t2)), min(1.0, max(t1, t2))
        if hi - lo <= tol / L:
            continue
        pm = (a[0] + (lo + hi) / 2 * ab[0], a[1] + (lo + hi) / 2 * ab[1])
        if point_segment_distance(pm[0], pm[1], c[0], c[1], d[0], d[1]) <= tol:
            remove.append((lo, hi))
    remove = _merge_intervals(remove)
    keep = []
    cursor = 0.0
    for lo, hi in remove:
        if lo - cursor > GEOM_TOL:
            keep.append((cursor, lo))
        cursor = max(cursor, hi)
    if 1.0 - cursor > GEOM_TOL:
        keep.append((cursor, 1.0))
    return keep


class _NetworkBuilder:
    """Accumulates segments with vertex dedup on a 1e-9 grid."""

    def __init__(self):
        self.verts: list[Point] = []
        self.index: dict[tuple[int, int], int] = {}
        self.edges: set[tuple[int, int]] = set()

    def vertex(self, x, y):
        key = (round(x * 1e9), round(y * 1e9))
        k = self.index.get(key)
        if k is None:
            k = len(self.verts)
            self.verts.append((x, y))
            self.index[key] = k
        return k

    def segment(self, a, b):
        if math.hypot(b[0] - a[0], b[1] - a[1]) < GEOM_TOL:
            return
        i, j = self.vertex(*a), self.vertex(*b)
        if i == j:
            return
        self.edges.add((min(i, j), max(i, j)))

    def build(self) -> SigmaNetwork:
        return SigmaNetwork(tuple(self.verts), tuple(sorted(self.edges)))


def build_tiled_sigma(budget: float, fitted: FittedMeasure, tile: SigmaNetwork,
                      domain: Domain) -> SigmaNetwork:
    """Chalkboard construction: per fitted cell, place k_i x k_i rescaled
    copies of the tile, k_i = floor(s*alpha_i*(L - sqrt(L))/L_e), clip to the
    domain and append the domain boundary.
    """
    L = float(budget)
    if L <= 1.0:
        raise ValueError("budget too small for fitted measure")
    s = fitted.cell_side
    Le = tile_effective_length(tile)
    on_bdry = _tile_side_cover(tile)
    inner_segs = tile.segments[~on_bdry]

    ks = []
    for cell in fitted.cells:
        k = math.floor(s * cell.weight * (L - math.sqrt(L)) / Le + GEOM_TOL)
        if k < 1:
            raise ValueError("budget too small for fitted measure")
        ks.append(k)

    # grid lines keyed by (axis, quantized coordinate) with merged intervals
    lines: dict[tuple[str, int], list[tuple[float, float]]] = {}

    def add_line(axis, coord, lo, hi):
        key = (axis, round(coord * 1e9))
        lines.setdefault(key, []).append((lo, hi))

    builder = _NetworkBuilder()
    for cell, k in zip(fitted.cells, ks):
        x0, y0 = cell.ix * s, cell.iy * s
        for j in range(k + 1):
            add_line('x', x0 + j * s / k, y0, y0 + s)
            add_line('y', y0 + j * s / k, x0, x0 + s)
        if len(inner_segs):
            for m in range(k):
                for n_ in range(k):
                    ox, oy = x0 + m * s / k, y0 + n_ * s / k
                    for seg in inner_segs:
                        a = (ox + seg[0] * s / k, oy + seg[1] * s / k)
                        b = (ox + seg[2] * s / k, oy + seg[3] * s / k)
                        _emit_clipped(builder, a, b, domain)

    for (axis, qcoord), ivals in lines.items():
        coord = qcoord / 1e9
        for lo, hi in _merge_intervals(ivals):
            if axis == 'x':
                a, b = (coord, lo), (coord, hi)
            else:
                a, b = (lo, coord), (hi, coord)
            _emit_clipped(builder, a, b, domain)

    for seg in domain.boundary_segments:
        builder.segment((seg[0], seg[1]), (seg[2], seg[3]))

    sigma = builder.build()
    if sigma.length > L * (1 + 1e-9):
        raise ValueError(f"tiling construction exceeded the budget: "
                         f"{sigma.length:.6f} > {L}")
    return sigma


def _emit_clipped(builder: _NetworkBuilder, a, b, domain: Domain):
    """Clip [a,b] to the domain, drop parts running along the boundary."""
    for t0, t1 in _segment_domain_intervals(a, b, domain):
        p = (a[0] + t0 * (b[0] - a[0]), a[1] + t0 * (b[1] - a[1]))
        q = (a[0] + t1 * (b[0] - a[0]), a[1] + t1 * (b[1] - a[1]))
        for u0, u1 in _subtract_boundary_overlap(p, q, domain):
            r = (p[0] + u0 * (q[0] - p[0]), p[1] + u0 * (q[1] - p[1]))
            w = (p[0] + u1 * (q[0] - p[0]), p[1] + u1 * (q[1] - p[1]))
            builder.segment(r, w)


# ---------------------------------------------------------------------------
# random connected networks (tests, annealing seeds)
# ---------------------------------------------------------------------------

def random_connected_network(rng, n_edges=6, domain: Domain | None = None,
                             scale=0.35) -> SigmaNetwork:
    """Random connected tree network inside the domain (default unit square)."""
    domain = domain or Domain.unit_square()
    xlo, ylo, xhi, yhi = domain.bbox
    for _ in range(200):
        try:
            while True:
                p = (rng.uniform(xlo, xhi), rng.uniform(ylo, yhi))
                if domain.contains_point(*p):
                    break
            verts = [p]
            edges = []
            for _ in range(n_edges):
                for _ in range(100):
                    base = verts[rng.integers(0, len(verts))]
                    ang = rng.uniform(0, 2 * math.pi)
                    r = rng.uniform(0.2, 1.0) * scale
                    q = (base[0] + r * math.cos(ang), base[1] + r * math.sin(ang))
                    if domain.contains_point(*q):
                        break
                else:
                    continue
                verts.append(q)
                edges.append((verts.index(base), len(verts) - 1))
            return SigmaNetwork(tuple(verts), tuple(edges))
        except NetworkError:
            continue
    raise RuntimeError("could not sample a valid random network")
