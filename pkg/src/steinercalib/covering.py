"""The n-sheeted cover of the punctured plane with cut gluing.

Constrained functions on the cover come in two representations:

* polygonal -- one planar complex whose faces carry a value per sheet; cut
  segments coincide with complex edges and are marked with their sheet shift,
  so jumps across the cut are measured between glued sheets.  Perimeter is
  exact, which is what the golden-value comparisons rely on.
* grid -- per-sheet cell arrays; forward-difference stencils that cross a cut
  segment read the permuted sheet.  This is the solver-facing representation.

Crossing cut segment i (0-based, oriented q_i -> q_{i+1}) left-to-right sends
sheet j to sheet j + (i+1) mod n; sheet 0 is the one fixed to 1 outside the
bounded window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (PointConfig, PolygonalComplex, Vec2, bbox_diameter,
                       perp, segment_intersection)
from .steiner import SteinerTree, tree_path


class SelfIntersectingCut(ValueError):
    pass


class CutHitsNetwork(ValueError):
    pass


class BadParameters(ValueError):
    pass


@dataclass
class CoverSpec:
    config: PointConfig
    cut_segments: list  # (Vec2 a, Vec2 b, int shift), oriented a -> b
    margin: float

    @property
    def n(self) -> int:
        return self.config.n

    def box(self):
        pts = [p for a, b, _ in self.cut_segments for p in (a, b)]
        pts += list(self.config.points)
        m = self.margin * bbox_diameter(list(self.config.points))
        xs = [p.x for p in pts]
        ys = [p.y for p in pts]
        return (min(xs) - m, min(ys) - m, max(xs) + m, max(ys) + m)


def build_cover(config: PointConfig, cut=None, margin: float = 0.25) -> CoverSpec:
    """Cover of the plane punctured at the terminals.

    The default cut is the chord chain q_0 -> q_1 -> ... -> q_{n-1} (hull
    edges, for convex position).  A custom cut is a polyline through all
    terminals in label order; every sub-segment between q_i and q_{i+1}
    carries the shift i+1.
    """
    n = config.n
    segs = []
    if cut is None:
        for i in range(n - 1):
            segs.append((config.points[i], config.points[i + 1], i + 1))
    else:
        pts = [p if isinstance(p, Vec2) else Vec2(*p) for p in cut]
        q = 1e-9 * bbox_diameter(pts)
        idx = []
        for t in config.points:
            hits = [k for k, p in enumerate(pts) if (p - t).norm() <= q]
            if not hits:
                raise ValueError("cut must pass through every terminal")
            idx.append(hits[0])
        if idx != sorted(idx):
            raise ValueError("cut must visit terminals in label order")
        for i in range(n - 1):
            for k in range(idx[i], idx[i + 1]):
                segs.append((pts[k], pts[k + 1], i + 1))
    _check_cut(segs)
    return CoverSpec(config=config, cut_segments=segs, margin=margin)


def _check_cut(segs):
    eps = 1e-12 * max(bbox_diameter([p for a, b, _ in segs for p in (a, b)]), 1.0)
    for i in range(len(segs)):
        for j in range(i + 1, len(segs)):
            a1, b1, _ = segs[i]
            a2, b2, _ = segs[j]
            kind, _ = segment_intersection(a1, b1, a2, b2, 1e-12)
            if kind == "proper":
                raise SelfIntersectingCut(f"cut segments {i} and {j} cross")
            if kind == "collinear" and j != i + 1:
                raise SelfIntersectingCut(f"cut segments {i} and {j} overlap")


@dataclass
class PolygonalCover:
    """Piecewise-constant function on the cover: one complex, a value per
    (sheet, face), and cut markings on complex edges."""

    cover: CoverSpec
    complex: PolygonalComplex
    values: np.ndarray  # (n_sheets, n_faces)
    cut_edges: dict = field(default_factory=dict)  # edge index -> signed shift

    @property
    def n(self) -> int:
        return self.cover.n

    def outside_values(self) -> np.ndarray:
        v = np.zeros(self.n)
        v[0] = 1.0
        return v

    def mark_cut_edges(self):
        """Match complex edges lying on cut segments; the stored shift is
        signed by the edge direction relative to the cut orientation."""
        self.cut_edges = {}
        scale = bbox_diameter(self.complex.vertices)
        tol = 1e-9 * scale
        for ei, e in enumerate(self.complex.edges):
            pa, pb = self.complex.vertices[e.a], self.complex.vertices[e.b]
            for a, b, shift in self.cover.cut_segments:
                d = b - a
                L2 = d.dot(d)
                if L2 == 0:
                    continue
                ta = (pa - a).dot(d) / L2
                tb = (pb - a).dot(d) / L2
                if -1e-9 <= ta <= 1 + 1e-9 and -1e-9 <= tb <= 1 + 1e-9 \
                        and abs((pa - a).cross(d)) <= tol * math.sqrt(L2) \
                        and abs((pb - a).cross(d)) <= tol * math.sqrt(L2):
                    sign = 1 if e.direction.dot(d) > 0 else -1
                    self.cut_edges[ei] = sign * shift
                    break

    def glue(self, edge_index: int, sheet: int) -> int:
        """Sheet reached on the right face when leaving `sheet` on the left
        face across the given edge."""
        s = self.cut_edges.get(edge_index, 0)
        return (sheet + s) % self.n

    def value_at(self, p: Vec2) -> np.ndarray:
        f = self.complex.face_containing(p)
        if f is None:
            return self.outside_values()
        return self.values[:, f].copy()

    def sheet_sum_at(self, p: Vec2) -> float:
        return float(self.value_at(p).sum())


def perimeter(u) -> float:
    """Total variation of a cover function: exact edge sums for the polygonal
    representation, isotropic discrete TV for grids.

    One-sided edges bound the represented window, not the function (the
    function continues outside with the constrained boundary values), so they
    never contribute.
    """
    if isinstance(u, GridCover):
        return grid_perimeter(u)
    total = 0.0
    for ei, e in enumerate(u.complex.edges):
        if e.left is None or e.right is None:
            continue
        vl = u.values[:, e.left]
        vr = u.values[:, e.right]
        if ei in u.cut_edges:
            jump = sum(abs(vl[j] - vr[u.glue(ei, j)]) for j in range(u.n))
        else:
            jump = float(np.abs(vl - vr).sum())
        total += e.length * jump
    return total


def from_steiner(tree: SteinerTree, cover: CoverSpec) -> PolygonalCover:
    """Binary constrained function whose jump set projects onto the tree;
    half its perimeter is the tree length.

    The represented window is the hull (one face per component of hull minus
    tree, each one-hot on the sheet the cut gluing dictates); outside the
    window the function is the constrained boundary value (sheet 0).
    Requires the default chord cut.  For n >= 3 the cut may meet the network
    only at terminals (CutHitsNetwork otherwise); for n = 2 the cut segment
    *is* the network and the construction is the sheet-0 indicator on a box.
    """
    config = cover.config
    n = config.n
    if n == 2:
        return _two_point_cover(tree, cover)
    default = [(config.points[i], config.points[i + 1]) for i in range(n - 1)]
    for (a, b, _), (da, db) in zip(cover.cut_segments, default):
        if (a - da).norm() > 1e-12 or (b - db).norm() > 1e-12:
            raise ValueError("from_steiner supports the default chord cut only")
    segs = tree.edge_segments(config)
    for a, b, _ in cover.cut_segments:
        for p1, p2 in segs:
            kind, _ = segment_intersection(a, b, p1, p2, 1e-12)
            if kind == "proper":
                raise CutHitsNetwork("cut crosses the network; relabel or re-cut")
    pts = tree.nodes(config)
    loops = []
    sheets = []
    for i in range(n):
        j = (i + 1) % n
        path = tree_path(tree, config, j, i)
        loop = [config.points[i], config.points[j]] + [pts[k] for k in path[1:-1]]
        loops.append(loop)
        sheets.append((n - 1 - i) % n)
    cx = PolygonalComplex.from_faces(loops)
    values = np.zeros((n, len(cx.faces)))
    for f, s in enumerate(sheets):
        values[s, f] = 1.0
    out = PolygonalCover(cover=cover, complex=cx, values=values)
    out.mark_cut_edges()
    return out


def _two_point_cover(tree: SteinerTree, cover: CoverSpec) -> PolygonalCover:
    q0, q1 = cover.config.points
    d = (q1 - q0).norm()
    m = max(cover.margin, 0.05) * d
    e = (q1 - q0).unit()
    nu = perp(e)
    w0 = q0 - e * m
    w1 = q1 + e * m
    upper = [w0, q0, q1, w1, w1 + nu * m, w0 + nu * m]
    lower = [w1, q1, q0, w0, w0 - nu * m, w1 - nu * m]
    cx = PolygonalComplex.from_faces([upper, lower])
    values = np.zeros((2, 2))
    values[0, :] = 1.0
    out = PolygonalCover(cover=cover, complex=cx, values=values)
    out.mark_cut_edges()
    return out


def pentagon_config(R: float = 1.0) -> PointConfig:
    """Regular pentagon, circumradius R, first vertex at angle 90 degrees,
    anticlockwise."""
    pts = tuple(
        Vec2(R * math.cos(math.pi / 2 + 2 * math.pi * k / 5),
             R * math.sin(math.pi / 2 + 2 * math.pi * k / 5))
        for k in range(5)
    )
    return PointConfig(pts, convex_position=True)


def pentagon_half_competitor(R: float, a: float, b: float) -> PolygonalCover:
    """Five-fold symmetric competitor with values {0, 1/2, 1}.

    Each hull edge carries an outer cap (value 1 on its sheet) whose inner
    vertex chain runs through the two marked points on the edge-midpoint ray:
    the axis point at radius a and the star point at radius b.  Each terminal
    carries a kite (center, flank points, terminal) covered by exactly the two
    neighboring sheets at 1/2, so the sheet sum is 1 everywhere for any valid
    pair (a, b).  The exact half-perimeter is

        2.5 * (max(a, b) + dist(q, a*m) + dist(q, b*m))

    which is minimized (as a -> b) at b* = cos36 - sin36/sqrt(3).
    """
    if R <= 0:
        raise BadParameters("R must be positive")
    rin = R * math.cos(math.pi / 5)
    if not (0 < a < rin and 0 < b < rin):
        raise BadParameters("radii must lie strictly between 0 and the inradius")
    if abs(a - b) <= 1e-12 * R:
        raise BadParameters("a = b degenerates the kites")
    config = pentagon_config(R)
    cover = build_cover(config)
    n = 5
    q = list(config.points)
    C = Vec2(0.0, 0.0)
    m = [(q[i] + q[(i + 1) % n]).unit() for i in range(n)]
    X = [mi * a for mi in m]
    S = [mi * b for mi in m]
    caps = []
    kites = []
    for i in range(n):
        j = (i + 1) % n
        caps.append([q[i], q[j], X[i], S[i]])
        if a < b:
            kites.append([C, X[i], q[j], S[j], X[j]])
        else:
            kites.append([C, S[i], X[i], q[j], S[j]])
    cx = PolygonalComplex.from_faces(caps + kites)
    values = np.zeros((n, len(cx.faces)))
    for i in range(n):
        si = (n - 1 - i) % n
        sj = (n - 2 - i) % n
        values[si, i] = 1.0           # cap of edge i
        values[si, n + i] = 0.5       # kite i belongs to sheets of edges i, i+1
        values[sj, n + i] = 0.5
    out = PolygonalCover(cover=cover, complex=cx, values=values)
    out.mark_cut_edges()
    return out


def pentagon_half_perimeter(R: float, a: float, b: float) -> float:
    """Closed-form half-perimeter of the pentagon half-competitor (oracle)."""
    c36 = math.cos(math.pi / 5)
    la = math.sqrt(R * R + a * a - 2 * R * a * c36)
    lb = math.sqrt(R * R + b * b - 2 * R * b * c36)
    return 2.5 * (max(a, b) + la + lb)


def optimize_half_competitor(R: float, grid: int = 24, refine: int = 60):
    """Grid + local search over (a, b), a != b, for the minimal half-perimeter.

    Returns (a, b, half_perimeter) with the perimeter evaluated exactly on the
    constructed polygonal function.
    """
    rin = R * math.cos(math.pi / 5)
    gap = 1e-7 * R
    best = None
    rs = np.linspace(0.05 * rin, 0.95 * rin, grid)
    for a in rs:
        for b in rs:
            if abs(a - b) <= gap:
                b = b + 2 * gap
            v = pentagon_half_perimeter(R, a, b)
            if best is None or v < best[2]:
                best = (a, b, v)
    a, b, v = best
    step = (rs[1] - rs[0])
    for _ in range(refine):
        improved = False
        for da, db in ((step, 0), (-step, 0), (0, step), (0, -step),
                       (step, step), (-step, -step)):
            aa, bb = a + da, b + db
            if not (0 < aa < rin and 0 < bb < rin):
                continue
            if abs(aa - bb) <= gap:
                bb += 2 * gap
            vv = pentagon_half_perimeter(R, aa, bb)
            if vv < v:
                a, b, v = aa, bb, vv
                improved = True
        if not improved:
            step *= 0.5
            if step < 1e-9 * R:
                break
    w = pentagon_half_competitor(R, a, b)
    return a, b, 0.5 * perimeter(w)


@dataclass
class GridCover:
    """Per-sheet cell values on a square grid with cut-aware stencils."""

    cover: CoverSpec
    values: np.ndarray       # (n_sheets, Ny, Nx)
    h: float
    origin: tuple            # center of cell (0, 0)
    shifts_x: np.ndarray     # (Ny, Nx-1) signed sheet shift for x-stencils
    shifts_y: np.ndarray     # (Ny-1, Nx)

    @property
    def n(self) -> int:
        return self.values.shape[0]


def grid_geometry(cover: CoverSpec, h: float):
    x0, y0, x1, y1 = cover.box()
    nx = max(2, int(math.ceil((x1 - x0) / h)))
    ny = max(2, int(math.ceil((y1 - y0) / h)))
    ox = x0 + h / 2
    oy = y0 + h / 2
    return ox, oy, nx, ny


def grid_shifts(cover: CoverSpec, ox, oy, nx, ny, h):
    """Signed sheet shifts for forward stencils crossing the cut.

    Test points are the cell centers offset by a fixed sub-cell perturbation
    (h/100) so centers lying exactly on the cut are classified stably.
    """
    px = ox + h * np.arange(nx) + 0.01 * h
    py = oy + h * np.arange(ny) + 0.0137 * h
    XX, YY = np.meshgrid(px, py)
    sx = np.zeros((ny, nx - 1), dtype=np.int64)
    sy = np.zeros((ny - 1, nx), dtype=np.int64)
    for a, b, shift in cover.cut_segments:
        d = b - a
        side = (XX - a.x) * d.y - (YY - a.y) * d.x   # negative = left of a->b
        # x-stencil between columns k and k+1 (same row)
        s1, s2 = side[:, :-1], side[:, 1:]
        cross = (s1 * s2) < 0
        if cross.any():
            frac = s1 / (s1 - s2)
            cxx = XX[:, :-1] + frac * h
            cyy = YY[:, :-1]
            u = ((cxx - a.x) * d.x + (cyy - a.y) * d.y) / d.dot(d)
            ok = cross & (u >= -1e-12) & (u <= 1 + 1e-12)
            # left(-) to right(+): side goes negative -> positive?  side>0
            # means the point is on the right of a->b (clockwise side).
            sx = sx + np.where(ok & (s1 < 0), shift, 0) - np.where(ok & (s1 > 0), shift, 0)
        side_y1, side_y2 = side[:-1, :], side[1:, :]
        crossy = (side_y1 * side_y2) < 0
        if crossy.any():
            frac = side_y1 / (side_y1 - side_y2)
            cxx = XX[:-1, :]
            cyy = YY[:-1, :] + frac * h
            u = ((cxx - a.x) * d.x + (cyy - a.y) * d.y) / d.dot(d)
            ok = crossy & (u >= -1e-12) & (u <= 1 + 1e-12)
            sy = sy + np.where(ok & (side_y1 < 0), shift, 0) - np.where(ok & (side_y1 > 0), shift, 0)
    return sx, sy


def _faces_as_arrays(cx: PolygonalComplex):
    out = []
    for f in range(len(cx.faces)):
        loop = cx.face_loop(f)
        out.append(np.array([[p.x, p.y] for p in loop]))
    return out


def _points_in_polygon(px, py, loop):
    """Vectorized crossing-number test; px, py flat arrays."""
    inside = np.zeros(px.shape, dtype=bool)
    n = len(loop)
    for i in range(n):
        x1, y1 = loop[i]
        x2, y2 = loop[(i + 1) % n]
        cond = (y1 > py) != (y2 > py)
        if not cond.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        inside ^= cond & (px < xint)
    return inside


def evaluate_many(u: PolygonalCover, px, py) -> np.ndarray:
    """Values (n_sheets, npts) of a polygonal cover function at many points."""
    px = np.asarray(px, dtype=float).ravel()
    py = np.asarray(py, dtype=float).ravel()
    vals = np.tile(u.outside_values()[:, None], (1, px.size))
    unassigned = np.ones(px.size, dtype=bool)
    for f, loop in enumerate(_faces_as_arrays(u.complex)):
        if not unassigned.any():
            break
        hit = unassigned & _points_in_polygon(px, py, loop)
        if hit.any():
            vals[:, hit] = u.values[:, f][:, None]
            unassigned &= ~hit
    return vals


def _box_sum(a, r):
    """Separable (2r+1)-box window sum over the trailing two axes (zero pad)."""
    w = 2 * r + 1
    p = np.pad(a, ((0, 0), (r, r), (0, 0)), mode="constant")
    c = np.cumsum(p, axis=1)
    a = np.concatenate([c[:, w - 1:w], c[:, w:] - c[:, :-w]], axis=1)
    p = np.pad(a, ((0, 0), (0, 0), (r, r)), mode="constant")
    c = np.cumsum(p, axis=2)
    return np.concatenate([c[:, :, w - 1:w], c[:, :, w:] - c[:, :, :-w]], axis=2)


def _masked_blur(vals, mask, r, passes=2):
    """Normalized box blur restricted to a mask (cells outside it neither
    contribute nor change); the same kernel acts on every sheet, so per-cell
    sheet sums are preserved."""
    if r < 1 or not mask.any():
        return vals
    m = mask.astype(float)[None]
    den = _box_sum(m, r)
    out = vals
    for _ in range(passes):
        num = _box_sum(out * m, r)
        new = np.where(den > 0, num / np.maximum(den, 1e-300), out)
        out = np.where(mask[None], new, out)
    return out


def _near_cut_mask(cover: CoverSpec, ox, oy, nx, ny, h, radius):
    base_x = ox + h * np.arange(nx)
    base_y = oy + h * np.arange(ny)
    XX, YY = np.meshgrid(base_x, base_y)
    near = np.zeros((ny, nx), dtype=bool)
    for a, b, _ in cover.cut_segments:
        d = b - a
        L2 = d.dot(d)
        t = np.clip(((XX - a.x) * d.x + (YY - a.y) * d.y) / max(L2, 1e-300), 0.0, 1.0)
        dist = np.hypot(XX - (a.x + t * d.x), YY - (a.y + t * d.y))
        near |= dist <= radius
    return near


def _hull_mask(cover: CoverSpec, ox, oy, nx, ny, h):
    base_x = ox + h * np.arange(nx) + 0.01 * h
    base_y = oy + h * np.arange(ny) + 0.0137 * h
    XX, YY = np.meshgrid(base_x, base_y)
    hull = np.array([[p.x, p.y] for p in cover.config.points])
    if hull.shape[0] < 3:
        return np.zeros((ny, nx), dtype=bool)
    return _points_in_polygon(XX.ravel(), YY.ravel(), hull).reshape(ny, nx)


def _nearest_hull_edge(cover: CoverSpec, ox, oy, nx, ny, h):
    """Index of the nearest hull edge (q_i, q_{i+1}) per cell."""
    base_x = ox + h * np.arange(nx)
    base_y = oy + h * np.arange(ny)
    XX, YY = np.meshgrid(base_x, base_y)
    n = cover.n
    best = np.full((ny, nx), np.inf)
    attr = np.zeros((ny, nx), dtype=np.int64)
    for i in range(n):
        a = cover.config.points[i]
        b = cover.config.points[(i + 1) % n]
        d = b - a
        L2 = max(d.dot(d), 1e-300)
        t = np.clip(((XX - a.x) * d.x + (YY - a.y) * d.y) / L2, 0.0, 1.0)
        dist = np.hypot(XX - (a.x + t * d.x), YY - (a.y + t * d.y))
        closer = dist < best
        best[closer] = dist[closer]
        attr[closer] = i
    return attr


def _glued_blur(vals, cover: CoverSpec, ox, oy, nx, ny, h, r, passes=2):
    """Triangular blur that respects the cut gluing for chord cuts on the
    hull boundary.

    Each side is blurred with the window's far side replaced by its glued
    continuation: seen from inside across hull edge i the outside is the
    constant one-hot of sheet (n-1-i) mod n, and seen from outside the inside
    appears with sheets rolled by the edge shift.  Interfaces that end at a
    terminal therefore blur smoothly through the cut instead of collapsing,
    and stencils across the cut still see matching traces.
    """
    n = vals.shape[0]
    inside = _hull_mask(cover, ox, oy, nx, ny, h)
    attr = _nearest_hull_edge(cover, ox, oy, nx, ny, h)
    sheets = np.arange(n)[:, None, None]
    # inside view: outside cells look like the one-hot of sheet (n-1-i)
    onehot = (sheets == (n - 1 - attr[None]) % n).astype(float)
    A_in = np.where(inside[None], vals, onehot)
    # outside view: inside cells appear with sheets rolled by the edge shift
    src = (sheets - (attr[None] + 1)) % n
    I, K = np.meshgrid(np.arange(vals.shape[1]), np.arange(vals.shape[2]),
                       indexing="ij")
    perm = vals[src, np.broadcast_to(I, src.shape), np.broadcast_to(K, src.shape)]
    A_out = np.where(inside[None], perm, vals)
    ones = np.ones((1,) + vals.shape[1:])
    den = ones
    for _ in range(passes):
        den = _box_sum(den, r)
    b_in, b_out = A_in, A_out
    for _ in range(passes):
        b_in = _box_sum(b_in, r)
        b_out = _box_sum(b_out, r)
    b_in = b_in / den
    b_out = b_out / den
    return np.where(inside[None], b_in, b_out)


def rasterize(u: PolygonalCover, h: float, antialias: int = 4,
              blur_cells: int | None = None) -> GridCover:
    """Sample a polygonal cover function on a grid.

    Cells are averaged over an antialias x antialias subsample (area
    fractions), then smoothed with a glue-aware triangular kernel whose
    radius grows like sqrt(diameter/h) cells: a one-cell interface ramp has a
    fixed anisotropy bias, a W-cell ramp errs like 1/W, and the corner
    rounding costs O(W*h), so W ~ sqrt(diam/h) makes the discrete isotropic
    TV converge to the Euclidean perimeter.  Cells near a cut segment are
    first re-sampled sharply at the same perturbed representative points the
    stencil-shift classification uses, so sheet values are never mixed across
    the gluing.
    """
    cover = u.cover
    ox, oy, nx, ny = grid_geometry(cover, h)
    k = max(1, int(antialias))
    offs = (np.arange(k) + 0.5) / k - 0.5
    base_x = ox + h * np.arange(nx)
    base_y = oy + h * np.arange(ny)
    acc = np.zeros((u.n, ny * nx))
    for dy in offs:
        for dx in offs:
            XX, YY = np.meshgrid(base_x + dx * h, base_y + dy * h)
            acc += evaluate_many(u, XX.ravel(), YY.ravel())
    vals = (acc / (k * k)).reshape(u.n, ny, nx)
    x0, y0, x1, y1 = cover.box()
    diam = math.hypot(x1 - x0, y1 - y0)
    if blur_cells is None:
        blur_cells = max(1, int(round(0.14 * math.sqrt(diam / h))))
    if cover.cut_segments:
        near = _near_cut_mask(cover, ox, oy, nx, ny, h, 1.2 * h)
        if near.any():
            # representative points consistent with grid_shifts
            XX, YY = np.meshgrid(base_x + 0.01 * h, base_y + 0.0137 * h)
            vals[:, near] = evaluate_many(u, XX[near], YY[near])
        if u.n >= 3 and blur_cells >= 1:
            vals = _glued_blur(vals, cover, ox, oy, nx, ny, h, blur_cells)
    else:
        vals = _masked_blur(vals, np.ones(vals.shape[1:], dtype=bool), blur_cells)
    sx, sy = grid_shifts(cover, ox, oy, nx, ny, h)
    return GridCover(cover=cover, values=vals, h=h, origin=(ox, oy),
                     shifts_x=sx, shifts_y=sy)


def grid_gradient(g: GridCover):
    """Cut-aware forward differences (raw value differences, not divided by h).

    Returns gx (n, Ny, Nx-1) and gy (n, Ny-1, Nx)."""
    u = g.values
    n = g.n
    ny, nx = u.shape[1], u.shape[2]
    gx = np.empty((n, ny, nx - 1))
    gy = np.empty((n, ny - 1, nx))
    I, K = np.meshgrid(np.arange(ny), np.arange(nx - 1), indexing="ij")
    I2, K2 = np.meshgrid(np.arange(ny - 1), np.arange(nx), indexing="ij")
    for j in range(n):
        sheet_x = (j + g.shifts_x) % n
        gx[j] = u[sheet_x, I, K + 1] - u[j, :, :-1]
        sheet_y = (j + g.shifts_y) % n
        gy[j] = u[sheet_y, I2 + 1, K2] - u[j, :-1, :]
    return gx, gy


def grid_perimeter(g: GridCover) -> float:
    gx, gy = grid_gradient(g)
    gx2 = np.zeros((g.n,) + g.values.shape[1:])
    gy2 = np.zeros_like(gx2)
    gx2[:, :, :-1] = gx
    gy2[:, :-1, :] = gy
    return float(g.h * np.sqrt(gx2 ** 2 + gy2 ** 2).sum())


def check_constraint(u: PolygonalCover, n_samples: int = 10000, seed: int = 0):
    """Sample the base window; returns (max |sheet sum - 1|, bad point count)."""
    rng = np.random.default_rng(seed)
    x0, y0, x1, y1 = u.cover.box()
    px = rng.uniform(x0, x1, n_samples)
    py = rng.uniform(y0, y1, n_samples)
    sums = evaluate_many(u, px, py).sum(axis=0)
    return float(np.abs(sums - 1).max()), int((np.abs(sums - 1) > 1e-9).sum())


def to_json(u: PolygonalCover) -> dict:
    return {
        "n_sheets": u.n,
        "terminals": [[p.x, p.y] for p in u.cover.config.points],
        "margin": u.cover.margin,
        "cut": [
            {"start": [a.x, a.y], "end": [b.x, b.y], "shift": s}
            for a, b, s in u.cover.cut_segments
        ],
        "vertices": [[p.x, p.y] for p in u.complex.vertices],
        "faces": [list(f) for f in u.complex.faces],
        "values": u.values.tolist(),
    }


def from_json(data: dict) -> PolygonalCover:
    config = PointConfig(tuple(Vec2(*p) for p in data["terminals"]),
                         convex_position=True)
    segs = [(Vec2(*c["start"]), Vec2(*c["end"]), int(c["shift"]))
            for c in data["cut"]]
    cover = CoverSpec(config=config, cut_segments=segs,
                      margin=float(data.get("margin", 0.25)))
    verts = [Vec2(*p) for p in data["vertices"]]
    loops = [[verts[i] for i in f] for f in data["faces"]]
    cx = PolygonalComplex.from_faces(loops)
    u = PolygonalCover(cover=cover, complex=cx,
                       values=np.asarray(data["values"], dtype=float))
    u.mark_cut_edges()
    return u


def export_pgm(g: GridCover, sheet: int, path):
    """Write one sheet as a P2 PGM image (0..255)."""
    v = np.clip(g.values[sheet], 0.0, 1.0)
    img = (255 * v[::-1]).astype(int)
    with open(path, "w") as f:
        f.write(f"P2\n{img.shape[1]} {img.shape[0]}\n255\n")
        for row in img:
            f.write(" ".join(str(x) for x in row) + "\n")


def export_csv(g: GridCover, sheet: int, path):
    np.savetxt(path, g.values[sheet], delimiter=",")
