"""Planar primitives shared by every module: vectors, orientation tests,
anticlockwise labeling of convex configurations, segment/polyline crossings,
and polygonal complexes with oriented interface edges."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

DEFAULT_EPS_FACTOR = 1e-12


class NotConvexPosition(ValueError):
    """Points are not in (strictly) convex position."""


class DegenerateIntersection(ValueError):
    """Segment overlaps a chain segment collinearly."""


@dataclass(frozen=True)
class Vec2:
    x: float
    y: float

    def __add__(self, o: "Vec2") -> "Vec2":
        return Vec2(self.x + o.x, self.y + o.y)

    def __sub__(self, o: "Vec2") -> "Vec2":
        return Vec2(self.x - o.x, self.y - o.y)

    def __mul__(self, s: float) -> "Vec2":
        return Vec2(self.x * s, self.y * s)

    __rmul__ = __mul__

    def __neg__(self) -> "Vec2":
        return Vec2(-self.x, -self.y)

    def dot(self, o: "Vec2") -> float:
        return self.x * o.x + self.y * o.y

    def cross(self, o: "Vec2") -> float:
        return self.x * o.y - self.y * o.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def unit(self) -> "Vec2":
        n = self.norm()
        if n == 0.0:
            raise ZeroDivisionError("cannot normalize zero vector")
        return Vec2(self.x / n, self.y / n)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


def perp(v: Vec2) -> Vec2:
    """90-degree anticlockwise rotation: (x, y) -> (-y, x)."""
    return Vec2(-v.y, v.x)


def bbox_diameter(points) -> float:
    xs = [p.x for p in points]
    ys = [p.y for p in points]
    return math.hypot(max(xs) - min(xs), max(ys) - min(ys))


def _eps_for(points, eps):
    if eps is not None:
        return eps
    d = bbox_diameter(points)
    return DEFAULT_EPS_FACTOR * (d if d > 0 else 1.0)


def signed_area(loop) -> float:
    """Signed area of a polygon loop (positive = anticlockwise)."""
    a = 0.0
    n = len(loop)
    for i in range(n):
        p, q = loop[i], loop[(i + 1) % n]
        a += p.cross(q)
    return 0.5 * a


def centroid(points) -> Vec2:
    n = len(points)
    return Vec2(sum(p.x for p in points) / n, sum(p.y for p in points) / n)


@dataclass(frozen=True)
class PointConfig:
    """Ordered terminals q_0..q_{n-1}; when convex_position the order is
    anticlockwise around the hull."""

    points: tuple
    convex_position: bool = False

    @property
    def n(self) -> int:
        return len(self.points)

    def __post_init__(self):
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise ValueError("need at least 2 points")
        eps = _eps_for(pts, None)
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if (pts[i] - pts[j]).norm() <= eps:
                    raise ValueError(f"points {i} and {j} coincide")


def label_anticlockwise(points, eps=None) -> PointConfig:
    """Order convex-position points anticlockwise around their hull centroid,
    starting from the first input point.

    Raises NotConvexPosition if any point is strictly inside the hull or if
    three points are collinear (degenerate hull).
    """
    pts = [p if isinstance(p, Vec2) else Vec2(*p) for p in points]
    n = len(pts)
    if n < 3:
        if n == 2:
            return PointConfig(tuple(pts), convex_position=True)
        raise ValueError("need at least 2 points")
    eps = _eps_for(pts, eps)
    c = centroid(pts)
    order = sorted(range(n), key=lambda i: math.atan2(pts[i].y - c.y, pts[i].x - c.x))
    loop = [pts[i] for i in order]
    area_eps = eps * bbox_diameter(pts)
    for i in range(n):
        a, b, d = loop[i - 1], loop[i], loop[(i + 1) % n]
        if (b - a).cross(d - b) <= area_eps:
            raise NotConvexPosition("points are not in strictly convex position")
    k = order.index(0)
    order = order[k:] + order[:k]
    out = tuple(pts[i] for i in order)
    assert signed_area(out) > 0
    return PointConfig(out, convex_position=True)


def segment_intersection(a1, a2, b1, b2, eps):
    """Intersection of segments [a1,a2] and [b1,b2].

    Returns (kind, t) where kind is 'proper' (transversal interior crossing,
    endpoints of b allowed), 'none', or 'collinear'; t is the parameter along
    [a1,a2] at the crossing.
    """
    d1 = a2 - a1
    d2 = b2 - b1
    den = d1.cross(d2)
    scale = max(d1.norm(), d2.norm(), 1.0)
    if abs(den) <= eps * scale * scale:
        # parallel; collinear overlap?
        if abs((b1 - a1).cross(d1)) <= eps * scale * scale:
            # project b endpoints on a
            L2 = d1.dot(d1)
            if L2 == 0:
                return ("none", None)
            t1 = (b1 - a1).dot(d1) / L2
            t2 = (b2 - a1).dot(d1) / L2
            lo, hi = min(t1, t2), max(t1, t2)
            if hi > eps and lo < 1 - eps and hi - lo > eps:
                return ("collinear", None)
        return ("none", None)
    t = (b1 - a1).cross(d2) / den
    u = (b1 - a1).cross(d1) / den
    tol = eps * scale / max(abs(den) / (scale * scale), 1e-300)
    if -tol <= u <= 1 + tol and -tol <= t <= 1 + tol:
        if eps < t < 1 - eps:
            return ("proper", t)
        return ("none", None)
    return ("none", None)


def segment_crossings(seg, chain, eps=None):
    """All transversal crossings of seg with a polyline chain, ordered along seg.

    Returns a list of (chain segment index, crossing Vec2). Raises
    DegenerateIntersection on collinear overlap. Crossings landing on a shared
    chain vertex are reported once.
    """
    a1, a2 = seg
    pts = list(chain) + [a1, a2]
    eps = _eps_for(pts, eps)
    rel = eps / max(bbox_diameter(pts), eps)
    hits = []
    for i in range(len(chain) - 1):
        kind, t = segment_intersection(a1, a2, chain[i], chain[i + 1], rel)
        if kind == "collinear":
            raise DegenerateIntersection(f"segment overlaps chain segment {i}")
        if kind == "proper":
            hits.append((t, i))
    hits.sort()
    out = []
    for t, i in hits:
        p = a1 + (a2 - a1) * t
        if out and (p - out[-1][1]).norm() <= eps:
            continue
        out.append((i, p))
    return out


def point_in_polygon(p, loop, eps=0.0) -> bool:
    """Crossing-number test; points within eps of the boundary count as inside."""
    inside = False
    n = len(loop)
    for i in range(n):
        a, b = loop[i], loop[(i + 1) % n]
        if eps > 0:
            d = b - a
            L2 = d.dot(d)
            if L2 > 0:
                t = max(0.0, min(1.0, (p - a).dot(d) / L2))
                if (p - (a + d * t)).norm() <= eps:
                    return True
        if (a.y > p.y) != (b.y > p.y):
            xint = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y)
            if p.x < xint:
                inside = not inside
    return inside


def dedupe_loop(loop, eps):
    out = []
    for p in loop:
        if not out or (p - out[-1]).norm() > eps:
            out.append(p)
    while len(out) > 1 and (out[0] - out[-1]).norm() <= eps:
        out.pop()
    return out


@dataclass
class InterfaceEdge:
    """Undirected interface edge of a complex, stored with the direction a->b.

    left/right are face indices (None = outside the complex). The unit normal
    nu = perp(unit(b-a)) points from the right face into the left face.
    """

    a: int
    b: int
    left: int | None
    right: int | None
    length: float
    normal: Vec2
    direction: Vec2


class PointIndex:
    """Tolerance-aware point identification: points within `q` of an existing
    entry share its id (checked over the 3x3 neighborhood of the rounded cell,
    so rounding-boundary straddlers still match)."""

    def __init__(self, q: float):
        self.q = q
        self.cells: dict[tuple[int, int], list[int]] = {}
        self.points: list[Vec2] = []

    def find(self, p: Vec2) -> int | None:
        kx, ky = round(p.x / self.q), round(p.y / self.q)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for i in self.cells.get((kx + dx, ky + dy), ()):
                    if (self.points[i] - p).norm() <= self.q:
                        return i
        return None

    def add(self, p: Vec2) -> int:
        i = self.find(p)
        if i is not None:
            return i
        i = len(self.points)
        self.points.append(p)
        self.cells.setdefault((round(p.x / self.q), round(p.y / self.q)), []).append(i)
        return i


@dataclass
class PolygonalComplex:
    """Faces tiling their union; vertices shared exactly between faces.

    Face loops are anticlockwise, so each face lies on the left of its own
    directed edges.
    """

    vertices: list = field(default_factory=list)
    faces: list = field(default_factory=list)  # list of vertex-index loops
    edges: list = field(default_factory=list)  # list of InterfaceEdge

    @staticmethod
    def from_faces(loops, eps=None) -> "PolygonalComplex":
        allpts = [p for loop in loops for p in loop]
        eps = _eps_for(allpts, None) if eps is None else eps
        q = max(eps, 1e-9 * max(bbox_diameter(allpts), 1.0))
        cx = PolygonalComplex()
        index = PointIndex(q)
        cx.vertices = index.points

        def vid(p: Vec2) -> int:
            return index.add(p)

        directed: dict[tuple[int, int], int] = {}
        for f, loop in enumerate(loops):
            loop = dedupe_loop(list(loop), q)
            if len(loop) < 3:
                raise ValueError(f"face {f} degenerate")
            if signed_area(loop) < 0:
                loop = loop[::-1]
            ids = [vid(p) for p in loop]
            cx.faces.append(ids)
            for i in range(len(ids)):
                a, b = ids[i], ids[(i + 1) % len(ids)]
                if a == b:
                    raise ValueError(f"face {f} has a zero-length edge")
                if (a, b) in directed:
                    raise ValueError("two faces share a directed edge; bad orientation")
                directed[(a, b)] = f
        seen = set()
        for (a, b), f in directed.items():
            if (b, a) in seen or (a, b) in seen:
                continue
            seen.add((a, b))
            g = directed.get((b, a))
            pa, pb = cx.vertices[a], cx.vertices[b]
            d = pb - pa
            cx.edges.append(
                InterfaceEdge(
                    a=a,
                    b=b,
                    left=f,
                    right=g,
                    length=d.norm(),
                    normal=perp(d.unit()),
                    direction=d.unit(),
                )
            )
        return cx

    def face_loop(self, f: int):
        return [self.vertices[i] for i in self.faces[f]]

    def face_containing(self, p: Vec2, eps=0.0) -> int | None:
        for f in range(len(self.faces)):
            if point_in_polygon(p, self.face_loop(f), eps):
                return f
        return None

    def face_centroid(self, f: int) -> Vec2:
        return centroid(self.face_loop(f))

    def total_area(self) -> float:
        return sum(signed_area(self.face_loop(f)) for f in range(len(self.faces)))
