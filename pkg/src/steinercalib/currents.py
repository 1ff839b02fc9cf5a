"""1-currents with coefficients in Z^{n-1} on planar segment graphs.

A current is a list of oriented segments carrying integer coefficient vectors.
Overlapping collinear segments are merged (splitting at all endpoints and
summing coefficients per fragment) before any query, so boundary and mass see
the superposed multiplicity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import PointConfig, Vec2, bbox_diameter
from .norms import NormKind, group_norm
from .steiner import SteinerTree, tree_path


class InvalidPartition(ValueError):
    """Phase boundaries do not cancel pairwise off the interfaces."""


def basis_vector(i: int, n: int) -> np.ndarray:
    """g_i in Z^{n-1} (0-based, i < n-1); g_{n-1} = -sum of the others."""
    g = np.zeros(n - 1, dtype=np.int64)
    if i < n - 1:
        g[i] = 1
    else:
        g[:] = -1
    return g


def terminal_coefficients(n: int) -> list[np.ndarray]:
    return [basis_vector(i, n) for i in range(n)]


@dataclass
class GroupCurrent:
    """Oriented segments (start, end, theta) with theta in Z^{n-1}."""

    n: int
    edges: list = field(default_factory=list)  # (Vec2, Vec2, np.ndarray)
    merged: bool = False

    def add(self, a: Vec2, b: Vec2, theta):
        th = np.asarray(theta)
        if th.shape != (self.n - 1,):
            raise ValueError("theta has wrong dimension")
        self.edges.append((a, b, th.copy()))
        self.merged = False

    def scale_points(self):
        return [p for a, b, _ in self.edges for p in (a, b)]


def _quantum(points) -> float:
    return 1e-9 * max(bbox_diameter(points), 1.0) if points else 1e-9


def _line_groups(current: GroupCurrent, q: float):
    """Group edges by supporting line; items are (a, b, th, sign) with sign
    relating the edge orientation to the group's canonical direction u."""
    groups: dict[tuple, list] = {}
    for a, b, th in current.edges:
        d = b - a
        if d.norm() <= q:
            continue
        u = d.unit()
        if u.x < -1e-12 or (abs(u.x) <= 1e-12 and u.y < 0):
            u, sign = -u, -1
        else:
            sign = 1
        c = u.cross(a)  # offset of the line, u fixed to canonical direction
        key = (round(u.x / 1e-9), round(u.y / 1e-9), round(c / q))
        groups.setdefault(key, (u, []))[1].append((a, b, th, sign))
    return groups


def _fragments(current: GroupCurrent, q: float):
    """Fragment the support at all endpoints; yields (pa, pb, summed theta,
    cover count) per fragment, with fragment endpoints reusing input points
    (no reconstructed coordinates, so node identities stay exact)."""
    out = []
    for _, (u, items) in _line_groups(current, q).items():
        marks = []  # (t, point), clustered within q
        for a, b, th, sign in items:
            for p in (a, b):
                t = p.dot(u)
                hit = False
                for k, (tk, pk) in enumerate(marks):
                    if abs(t - tk) <= q:
                        hit = True
                        break
                if not hit:
                    marks.append((t, p))
        marks.sort(key=lambda m: m[0])
        for k in range(len(marks) - 1):
            (lo, pa), (hi, pb) = marks[k], marks[k + 1]
            mid = 0.5 * (lo + hi)
            total = np.zeros(current.n - 1, dtype=items[0][2].dtype)
            cnt = 0
            for a, b, th, sign in items:
                t1, t2 = a.dot(u), b.dot(u)
                if min(t1, t2) - q / 2 <= mid <= max(t1, t2) + q / 2:
                    total = total + sign * th
                    cnt += 1
            if cnt:
                out.append((pa, pb, total, cnt))
    return out


def merge(current: GroupCurrent) -> GroupCurrent:
    """Split collinear overlapping edges at all endpoints, sum theta per
    fragment, drop zero fragments."""
    pts = current.scale_points()
    if not pts:
        return GroupCurrent(current.n, [], merged=True)
    q = _quantum(pts)
    out = GroupCurrent(current.n, [], merged=True)
    for pa, pb, total, _ in _fragments(current, q):
        if np.any(total != 0):
            out.edges.append((pa, pb, total))
    return out


def boundary(current: GroupCurrent):
    """Signed endpoint sums: edge [a -> b, theta] contributes -theta at a and
    +theta at b. Returns a list of (Vec2, theta) with zero coefficients dropped."""
    from .geometry import PointIndex

    cur = current if current.merged else merge(current)
    pts = cur.scale_points()
    if not pts:
        return []
    q = _quantum(pts)
    index = PointIndex(q)
    acc: dict[int, np.ndarray] = {}
    for a, b, th in cur.edges:
        for p, s in ((a, -1), (b, +1)):
            i = index.add(p)
            acc[i] = acc.get(i, 0) + s * np.asarray(th)
    return [(index.points[i], th) for i, th in acc.items() if np.any(th != 0)]


def mass(current: GroupCurrent, kind: NormKind = NormKind.flat) -> float:
    cur = current if current.merged else merge(current)
    return float(sum((b - a).norm() * group_norm(th, kind) for a, b, th in cur.edges))


def _clockwise(loop):
    from .geometry import signed_area

    return loop[::-1] if signed_area(loop) > 0 else loop


def _convex_hull(points):
    """Monotone chain; strict turns only (collinear points dropped)."""
    pts = sorted(set((p.x, p.y) for p in points))
    if len(pts) < 3:
        return [Vec2(*p) for p in pts]

    def half(ps):
        out = []
        for p in ps:
            while len(out) >= 2 and ((out[-1][0] - out[-2][0]) * (p[1] - out[-2][1])
                                     - (out[-1][1] - out[-2][1]) * (p[0] - out[-2][0])) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return [Vec2(*p) for p in lower[:-1] + upper[:-1]]


def _on_hull_boundary(p: Vec2, hull, tol) -> bool:
    m = len(hull)
    for i in range(m):
        a, b = hull[i], hull[(i + 1) % m]
        d = b - a
        L2 = d.dot(d)
        if L2 == 0:
            continue
        t = max(0.0, min(1.0, (p - a).dot(d) / L2))
        if (p - (a + d * t)).norm() <= tol:
            return True
    return False


def phase_multiplicities(n: int) -> list[np.ndarray]:
    """a_i = sum_{k=i}^{n-2} g_k (a_{n-1} = 0), so a_i - a_j is the contiguous
    subsum g_i + ... + g_{j-1} for i < j."""
    return [np.array([1 if i <= k <= n - 2 else 0 for k in range(n - 1)], dtype=np.int64)
            for i in range(n)]


def current_from_partition(phases, config: PointConfig) -> GroupCurrent:
    """Current of a polygonal partition.

    phases[i] is the polygon of the phase whose closure contains the hull arc
    from q_{i-1} to q_i (anticlockwise labels). Each phase boundary is
    traversed clockwise (phase on the right of the tangent) with multiplicity
    a_i; fragments on the hull boundary are dropped (they are not interfaces).
    After merging, the interface between phases i < j carries the contiguous
    subsum g_i + ... + g_{j-1} and the boundary is exactly sum_i g_i dirac(q_i).
    """
    n = config.n
    if len(phases) != n:
        raise InvalidPartition(f"expected {n} phases, got {len(phases)}")
    a = phase_multiplicities(n)
    allpts = [p for loop in phases for p in loop]
    q = _quantum(allpts)
    hull = _convex_hull(allpts)
    cur = GroupCurrent(n)
    for i, loop in enumerate(phases):
        cw = _clockwise(list(loop))
        for k in range(len(cw)):
            p1, p2 = cw[k], cw[(k + 1) % len(cw)]
            if (p2 - p1).norm() <= q:
                continue
            cur.add(p1, p2, a[i])
    out = GroupCurrent(n, merged=True)
    for a1, b1, th, cnt in _fragments(cur, q):
        mid = a1 + (b1 - a1) * 0.5
        if cnt == 1:
            if not _on_hull_boundary(mid, hull, 10 * q):
                raise InvalidPartition("uncancelled phase boundary off the hull")
            continue
        if cnt > 2:
            raise InvalidPartition("more than two phases share an interface")
        if np.any(th != 0):
            out.edges.append((a1, b1, th))
    return out




def current_from_tree(tree: SteinerTree, config: PointConfig) -> GroupCurrent:
    """Superpose the tree paths from the last terminal to each other terminal,
    path to q_i carrying g_i; the merged boundary is sum_i g_i dirac(q_i)."""
    n = config.n
    pts = tree.nodes(config)
    q = _quantum(list(config.points))
    cur = GroupCurrent(n)
    for i in range(n - 1):
        path = tree_path(tree, config, n - 1, i)
        g = basis_vector(i, n)
        for u, v in zip(path[:-1], path[1:]):
            if (pts[v] - pts[u]).norm() <= q:
                continue
            cur.add(pts[u], pts[v], g)
    return merge(cur)


def partition_energy(phases, config: PointConfig) -> float:
    """Sum of phase perimeters inside the hull (each interface counted twice):
    the partition energy that equals twice the flat mass of its current."""
    allpts = [p for loop in phases for p in loop]
    q = _quantum(allpts)
    hull = _convex_hull(allpts)
    total = 0.0
    for loop in phases:
        L = list(loop)
        for k in range(len(L)):
            p1, p2 = L[k], L[(k + 1) % len(L)]
            seg = (p2 - p1).norm()
            if seg <= q:
                continue
            mid = p1 + (p2 - p1) * 0.5
            if not _on_hull_boundary(mid, hull, 10 * q):
                total += seg
    return total


def to_json(current: GroupCurrent) -> dict:
    return {
        "n": current.n,
        "edges": [
            {"start": [a.x, a.y], "end": [b.x, b.y], "theta": [int(t) for t in th]}
            for a, b, th in current.edges
        ],
    }


def from_json(data: dict) -> GroupCurrent:
    cur = GroupCurrent(int(data["n"]))
    for e in data["edges"]:
        cur.add(Vec2(*e["start"]), Vec2(*e["end"]),
                np.asarray(e["theta"], dtype=np.int64))
    return cur


def save(current: GroupCurrent, path):
    with open(path, "w") as f:
        json.dump(to_json(current), f, indent=1)


def load(path) -> GroupCurrent:
    with open(path) as f:
        return from_json(json.load(f))
