"""Calibration candidates as piecewise-constant fields and their verifiers.

Three notions are supported: paired calibrations of a partition (n fields on
the hull), calibrations on the covering (n per-sheet fields), and matrix
calibrations for group currents (n-1 row fields sized by a comass).  The
conversions between the last two are the gauge-fixed linear maps

    tilde_i - tilde_{i+1} = 2 * perp(row_i),     sum_i tilde_i = 0,

whose round trip is the exact identity on rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .covering import PolygonalCover, perimeter
from .currents import GroupCurrent, merge
from .geometry import PolygonalComplex, Vec2, bbox_diameter, perp
from .norms import NormKind, comass, comass_verdict, group_norm


class IncompatibleComplexes(ValueError):
    pass


class PreconditionViolated(ValueError):
    pass


@dataclass
class PCField:
    """Piecewise-constant vector data on a polygonal complex.

    vectors has shape (n_faces, k, 2): k = n sheets for covering/paired
    fields, k = n-1 rows for a currents matrix field.
    """

    complex: PolygonalComplex
    vectors: np.ndarray
    kind: str = "sheets"  # or "rows"

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=float)
        if self.vectors.shape[0] != len(self.complex.faces):
            raise ValueError("one vector block per face required")


@dataclass
class Condition:
    name: str
    verdict: str          # pass | marginal | fail
    residual: float
    witness: str = ""


@dataclass
class VerificationReport:
    conditions: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.verdict != "fail" for c in self.conditions)

    def add(self, name, residual, tol, witness="", marginal_factor=2.0):
        if residual <= tol:
            verdict = "pass"
        elif residual <= marginal_factor * tol:
            verdict = "marginal"
        else:
            verdict = "fail"
        self.conditions.append(Condition(name, verdict, float(residual), witness))

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "conditions": [
                {"name": c.name, "verdict": c.verdict,
                 "residual": c.residual, "witness": c.witness}
                for c in self.conditions
            ],
        }


def _same_complex(a: PolygonalComplex, b: PolygonalComplex) -> bool:
    if a is b:
        return True
    if len(a.vertices) != len(b.vertices) or len(a.faces) != len(b.faces):
        return False
    tol = 1e-9 * max(bbox_diameter(a.vertices), 1.0)
    return all((p - q).norm() <= tol for p, q in zip(a.vertices, b.vertices))


def verify_approx_regular(fld: PCField, tol: float = 1e-9,
                          glue=None) -> VerificationReport:
    """Normal-trace continuity across every two-sided interface edge.

    Piecewise-constant blocks are divergence-free inside faces, so matching
    normal traces certify the distributional divergence-free condition.  For
    fields on a cover, `glue(edge_index, sheet)` maps the left sheet to the
    sheet read on the right face across a cut edge.
    """
    rep = VerificationReport()
    worst = 0.0
    witness = ""
    k = fld.vectors.shape[1]
    for ei, e in enumerate(fld.complex.edges):
        if e.left is None or e.right is None:
            continue
        nu = np.array([e.normal.x, e.normal.y])
        for j in range(k):
            jr = glue(ei, j) if glue is not None else j
            r = abs(float((fld.vectors[e.left, j] - fld.vectors[e.right, jr]) @ nu))
            if r > worst:
                worst = r
                witness = f"edge {ei} component {j}"
    rep.add("normal-trace continuity (div-free)", worst, tol, witness)
    return rep


def triangle_paired_example(config) -> list[Vec2]:
    """The classical constant paired calibration of the equilateral triangle:
    phi_i = (2/sqrt(3)) * unit vector from the centroid toward the midpoint of
    the side carried by phase i (the arc from q_{i-1} to q_i)."""
    pts = list(config.points)
    if len(pts) != 3:
        raise ValueError("equilateral triangle expected")
    sides = [abs((pts[i] - pts[(i + 1) % 3]).norm()) for i in range(3)]
    if max(sides) - min(sides) > 1e-9 * max(sides):
        raise ValueError("triangle must be equilateral")
    c = Vec2(sum(p.x for p in pts) / 3, sum(p.y for p in pts) / 3)
    out = []
    for i in range(3):
        mid = (pts[i - 1] + pts[i]) * 0.5
        out.append((mid - c).unit() * (2.0 / math.sqrt(3.0)))
    return out


def _as_per_face(fields, n_faces):
    """Normalize constant field lists to per-face arrays (n_faces, k, 2)."""
    if isinstance(fields, PCField):
        return fields.vectors
    arr = np.array([[f.x, f.y] if isinstance(f, Vec2) else f for f in fields],
                   dtype=float)
    return np.tile(arr[None, :, :], (n_faces, 1, 1))


def verify_paired(fields, phases, config, tol: float = 1e-9) -> VerificationReport:
    """Paired-calibration conditions for a polygonal partition.

    phases[i] is the phase adjacent to the hull arc ending at q_i (the same
    convention as current_from_partition).  Conditions: each field is
    divergence free, pairwise differences are bounded by 2, and across every
    interface (phase i on the left of the edge direction, phase j on the
    right) the pairing (phi_i - phi_j) . nu equals 2 for the right-to-left
    normal nu.
    """
    cx = PolygonalComplex.from_faces(phases)
    n = len(phases)
    F = _as_per_face(fields, len(cx.faces))
    if F.shape[1] != n:
        raise IncompatibleComplexes("need one field per phase")
    rep = VerificationReport()

    fld = PCField(cx, F, kind="sheets")
    div_rep = verify_approx_regular(fld, tol)
    rep.conditions.append(div_rep.conditions[0])

    worst2 = 0.0
    wit2 = ""
    for f in range(len(cx.faces)):
        for i in range(n):
            for j in range(i + 1, n):
                d = F[f, i] - F[f, j]
                r = max(0.0, float(np.hypot(d[0], d[1])) - 2.0)
                if r > worst2:
                    worst2, wit2 = r, f"face {f} pair ({i},{j})"
    rep.add("pairwise bound |phi_i - phi_j| <= 2", worst2, tol, wit2)

    worst3 = 0.0
    wit3 = ""
    for ei, e in enumerate(cx.edges):
        if e.left is None or e.right is None:
            continue
        i, j = e.left, e.right
        nu = np.array([e.normal.x, e.normal.y])
        val = float((F[i, i] - F[j, j]) @ nu)
        r = abs(val - 2.0)
        if r > worst3:
            worst3, wit3 = r, f"interface edge {ei} phases ({i},{j})"
    rep.add("interface pairing (phi_i - phi_j) . nu = 2", worst3, tol, wit3)
    return rep


def verify_covering(fld: PCField, E: PolygonalCover, tol: float = 1e-9,
                    pair_restriction=None) -> VerificationReport:
    """Covering-calibration conditions for a binary constrained function.

    (1) divergence-free on the cover: per-sheet normal-trace continuity, with
        traces compared across the cut identification on cut edges;
    (2) pairwise per-sheet bound <= 2 (optionally restricted to a pair set);
    (3) the field integrates the jump of E to its full perimeter.
    """
    if not _same_complex(fld.complex, E.complex):
        raise IncompatibleComplexes("field and function live on different complexes")
    n = E.n
    F = fld.vectors
    if F.shape[1] != n:
        raise IncompatibleComplexes("need one field per sheet")
    rep = VerificationReport()

    rep.conditions.append(
        verify_approx_regular(fld, tol, glue=E.glue).conditions[0])

    worst2, wit2 = 0.0, ""
    pairs = None if pair_restriction is None else {tuple(sorted(p)) for p in pair_restriction}
    for f in range(len(E.complex.faces)):
        for i in range(n):
            for j in range(i + 1, n):
                if pairs is not None and (i, j) not in pairs:
                    continue
                d = F[f, i] - F[f, j]
                r = max(0.0, float(np.hypot(d[0], d[1])) - 2.0)
                if r > worst2:
                    worst2, wit2 = r, f"face {f} sheets ({i},{j})"
    name2 = "pairwise bound" + ("" if pairs is None else " (family-restricted)")
    rep.add(name2, worst2, tol, wit2)

    integral = 0.0
    P = 0.0
    for ei, e in enumerate(E.complex.edges):
        if e.left is None or e.right is None:
            continue
        nu = np.array([e.normal.x, e.normal.y])
        vl = E.values[:, e.left]
        vr = E.values[:, e.right]
        for j in range(n):
            jr = E.glue(ei, j)
            jump = float(vl[j] - vr[jr])
            if jump == 0.0:
                continue
            P += e.length * abs(jump)
            tr = 0.5 * (float(F[e.left, j] @ nu) + float(F[e.right, jr] @ nu))
            integral += e.length * tr * jump
    resid = abs(integral - P) / max(P, 1e-12)
    rep.add("jump integral equals perimeter", resid, tol,
            f"integral {integral:.12g} vs perimeter {P:.12g}")
    return rep


def verify_current(fld: PCField, T: GroupCurrent, kind: NormKind = NormKind.flat,
                   tol: float = 1e-9) -> VerificationReport:
    """Current-calibration conditions for a matrix field covering supp T.

    (i) closed rows: the tangential trace of every row is continuous across
        interface edges (equivalently the perp rows are divergence free);
    (ii) comass bound per face under the chosen norm;
    (iii) <Phi tau, theta> = |theta| on every edge of the merged current.
    """
    rep = VerificationReport()
    cx = fld.complex
    R = fld.vectors
    k = R.shape[1]

    worst1, wit1 = 0.0, ""
    for ei, e in enumerate(cx.edges):
        if e.left is None or e.right is None:
            continue
        tau = np.array([e.direction.x, e.direction.y])
        for j in range(k):
            r = abs(float((R[e.left, j] - R[e.right, j]) @ tau))
            if r > worst1:
                worst1, wit1 = r, f"edge {ei} row {j}"
    rep.add("closed rows (tangential continuity)", worst1, tol, wit1)

    worst2, wit2, verdict2 = 0.0, "", "pass"
    for f in range(len(cx.faces)):
        val = comass(R[f], kind)
        if val > worst2:
            worst2, wit2 = val, f"face {f}"
    verdict2 = comass_verdict(worst2, tol)
    rep.conditions.append(Condition(f"comass_{NormKind(kind).value} <= 1",
                                    verdict2, max(0.0, worst2 - 1.0), wit2))

    cur = T if T.merged else merge(T)
    worst3, wit3 = 0.0, ""
    scale = bbox_diameter(cx.vertices)
    for idx, (a, b, th) in enumerate(cur.edges):
        tau = b - a
        L = tau.norm()
        tau = np.array([tau.x, tau.y]) / L
        mid = a + (b - a) * 0.5
        nu = Vec2(-tau[1], tau[0])
        vals = []
        for sgn in (+1, -1):
            probe = mid + nu * (sgn * 1e-7 * scale)
            f = cx.face_containing(probe)
            if f is not None:
                vals.append(float((R[f].T @ np.asarray(th, dtype=float)) @ tau))
        if not vals:
            raise IncompatibleComplexes(f"current edge {idx} not covered by the complex")
        want = group_norm(th, kind)
        r = max(abs(v - want) for v in vals) / max(want, 1e-12)
        if r > worst3:
            worst3, wit3 = r, f"current edge {idx}"
    rep.add("pairing <Phi tau, theta> = |theta|", worst3, tol, wit3)
    return rep


def sheet_current(E: PolygonalCover) -> GroupCurrent:
    """The group current of a binary cover function in sheet labeling.

    Every jump interface between the regions on sheets a < b is oriented with
    the lower sheet on the left and carries the contiguous window
    g_a + ... + g_{b-1}.  This is the current that a converted covering
    calibration pairs with (its boundary is the sheet-permuted terminal
    chain); the terminal-labeled current with boundary sum g_i dirac(q_i) is
    current_from_partition.
    """
    from .currents import GroupCurrent as GC

    n = E.n
    cur = GC(n)
    for ei, e in enumerate(E.complex.edges):
        if e.left is None or e.right is None:
            continue
        vl = E.values[:, e.left]
        vr = E.values[:, e.right]
        jumping = [j for j in range(n) if abs(vl[j] - vr[E.glue(ei, j)]) > 1e-12]
        if not jumping:
            continue
        if len(jumping) != 2:
            raise ValueError("sheet_current needs a binary cover function")
        a, b = sorted(jumping)
        # the sheet whose region lies on the left face
        left_sheet = a if vl[a] > 0.5 else b
        theta = np.zeros(n - 1, dtype=np.int64)
        theta[a:b] = 1
        pa = E.complex.vertices[e.a]
        pb = E.complex.vertices[e.b]
        if left_sheet == a:
            cur.add(pa, pb, theta)
        else:
            cur.add(pb, pa, theta)
    return merge(cur)


def convert_current_to_covering(rows) -> np.ndarray:
    """Solve tilde_i - tilde_{i+1} = 2 perp(row_i) with the mean-zero gauge.

    rows: (n-1, 2)(single point) or (n_faces, n-1, 2); returns one more block
    per point.
    """
    R = np.asarray(rows, dtype=float)
    single = R.ndim == 2
    if single:
        R = R[None]
    nf, d, _ = R.shape
    perp_rows = np.stack([-R[:, :, 1], R[:, :, 0]], axis=2)
    partial = np.zeros((nf, d + 1, 2))
    partial[:, 1:] = np.cumsum(2.0 * perp_rows, axis=1)
    tilde = partial.mean(axis=1, keepdims=True) - partial
    return tilde[0] if single else tilde


def convert_covering_to_current(fields) -> np.ndarray:
    """Left inverse of convert_current_to_covering (exact on rows):
    row_i = -perp((tilde_i - tilde_{i+1}) / 2)."""
    F = np.asarray(fields, dtype=float)
    single = F.ndim == 2
    if single:
        F = F[None]
    diff = 0.5 * (F[:, :-1] - F[:, 1:])
    rows = np.stack([diff[:, :, 1], -diff[:, :, 0]], axis=2)
    return rows[0] if single else rows


def miracle_bound_check(t, eta, tol: float = 1e-12) -> bool:
    """|sum t_i eta_i| <= sum |eta_i| for zero-sum eta and pairwise t-spread
    at most 2.  PreconditionViolated on invalid inputs; always True on valid
    ones (used as a property-test oracle)."""
    t = np.asarray(t, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if t.shape != eta.shape:
        raise PreconditionViolated("t and eta must have the same length")
    scale = max(1.0, float(np.abs(eta).sum()))
    if abs(eta.sum()) > tol * scale:
        raise PreconditionViolated("eta must sum to zero")
    if t.size and (t.max() - t.min()) > 2.0 + tol:
        raise PreconditionViolated("pairwise spread of t exceeds 2")
    return bool(abs(float(t @ eta)) <= float(np.abs(eta).sum()) + 1e-9 * scale)


@dataclass
class NonexistenceVerdict:
    status: str               # "NoCalibrationExists" | "Inconclusive"
    witness: int | None = None
    gap: float = 0.0          # half-perimeter units
    binary_value: float = 0.0
    best_competitor: float = 0.0

    def to_json(self):
        return {"status": self.status, "witness": self.witness,
                "gap_half_perimeter": self.gap,
                "half_perimeter_binary": self.binary_value,
                "half_perimeter_best_competitor": self.best_competitor}


def certify_nonexistence(u_binary: PolygonalCover, competitors,
                         tol: float | None = None) -> NonexistenceVerdict:
    """If any finite-valued competitor has strictly smaller total variation
    than the binary candidate, no calibration for the candidate can exist
    (minimality would extend to all finite-valued constrained functions).
    """
    Pu = perimeter(u_binary)
    if tol is None:
        tol = 1e-9 * max(Pu, 1.0)
    best = None
    for i, w in enumerate(competitors):
        Pw = perimeter(w)
        if best is None or Pw < best[1]:
            best = (i, Pw)
    if best is not None and best[1] < Pu - tol:
        return NonexistenceVerdict("NoCalibrationExists", witness=best[0],
                                   gap=0.5 * (Pu - best[1]),
                                   binary_value=0.5 * Pu,
                                   best_competitor=0.5 * best[1])
    return NonexistenceVerdict("Inconclusive",
                               binary_value=0.5 * Pu,
                               best_competitor=0.5 * best[1] if best else math.inf)


def classify_family(E: PolygonalCover, min_length: float = 1e-9) -> set:
    """Sheet pairs (i, j), i < j, whose boundaries meet with positive length.

    For a binary constrained function these are the pairs of sheets carrying
    the two one-hot faces across each jump edge (after cut gluing).
    """
    acc: dict[tuple, float] = {}
    for ei, e in enumerate(E.complex.edges):
        if e.left is None or e.right is None:
            continue
        vl = E.values[:, e.left]
        vr = E.values[:, e.right]
        jumping = [j for j in range(E.n)
                   if abs(vl[j] - vr[E.glue(ei, j)]) > 1e-12]
        if len(jumping) == 2:
            key = tuple(sorted(jumping))
            acc[key] = acc.get(key, 0.0) + e.length
    scale = bbox_diameter(E.complex.vertices)
    return {k for k, L in acc.items() if L > min_length * scale}


def verify_family_calibration(fld: PCField, E: PolygonalCover, pairs,
                              tol: float = 1e-9) -> VerificationReport:
    """verify_covering with the pairwise bound restricted to the family's
    sheet pairs (the weakened size condition for calibrations in families)."""
    return verify_covering(fld, E, tol, pair_restriction=pairs)
