"""Polyhedral norm calculus on the coefficient space R^{n-1}.

Two norms are used for masses of group currents: the "flat" norm
(sup of the positive entries minus inf of the nonpositive entries) and the
"natural" norm whose unit ball is the convex hull of +/- all contiguous
subsums of the basis g_0..g_{n-2}. Matrix-valued fields are sized by the
corresponding comass: the flat comass enumerates all 2^{n-1}-1 subset row
sums, the natural comass only the n(n-1)/2 contiguous ranges.
"""

from __future__ import annotations

from enum import Enum

import numpy as np
from scipy.optimize import linprog

LP_TOL = 1e-9


class LPFailure(RuntimeError):
    """The gauge/duality linear program did not solve."""


class NormKind(str, Enum):
    flat = "flat"
    natural = "natural"


def _vec(x) -> np.ndarray:
    a = np.asarray(x, dtype=float).ravel()
    if a.size < 1:
        raise ValueError("empty coefficient vector")
    return a


def norm_flat(x) -> float:
    """sup over positive entries (0 if none) minus inf over entries <= 0 (0 if none)."""
    a = _vec(x)
    pos = a[a > 0]
    neg = a[a <= 0]
    sup = pos.max() if pos.size else 0.0
    inf = neg.min() if neg.size else 0.0
    return float(sup - inf)


def dual_norm_flat(x) -> float:
    """max(sum of positive entries, sum of |nonpositive entries|)."""
    a = _vec(x)
    return float(max(a[a > 0].sum() if (a > 0).any() else 0.0,
                     -(a[a <= 0].sum()) if (a <= 0).any() else 0.0))


def natural_ball_vertices(n: int) -> list[np.ndarray]:
    """The n(n-1)/2 contiguous-subsum vectors in R^{n-1} and their negatives."""
    if n < 2:
        raise ValueError("n >= 2 required")
    d = n - 1
    out = []
    for i in range(d):
        for j in range(i + 1, d + 1):
            v = np.zeros(d)
            v[i:j] = 1.0
            out.append(v)
    return out + [-v for v in out]


def norm_natural(x) -> float:
    """Gauge of conv(+/- contiguous subsums): half the l1 norm of the
    zero-padded difference sequence of x.

    A vector x = sum_w c_w * w over interval indicators w has, in the
    difference domain, Dx = sum_w c_w (e_i - e_j); the cheapest signed-interval
    decomposition pairs positive and negative mass of Dx one-for-one, so the
    gauge equals  (1/2) * sum_k |x_k - x_{k-1}|  with x_0 = x_n = 0.
    The LP gauge (norm_natural_lp) is kept as an independent oracle.
    """
    a = _vec(x)
    padded = np.concatenate(([0.0], a, [0.0]))
    return float(0.5 * np.abs(np.diff(padded)).sum())


def norm_natural_lp(x) -> float:
    """Gauge of the natural unit ball by linear programming:
    min sum(lambda) s.t. V lambda = x, lambda >= 0, V = [+/- vertices]."""
    a = _vec(x)
    n = a.size + 1
    V = np.stack(natural_ball_vertices(n), axis=1)
    m = V.shape[1]
    res = linprog(np.ones(m), A_eq=V, b_eq=a, bounds=[(0, None)] * m, method="highs")
    if not res.success:
        raise LPFailure(f"gauge LP failed: {res.message}")
    return float(res.fun)


def dual_norm_natural(x) -> float:
    """Support function of the natural unit ball: max |<x, v>| over the
    contiguous-subsum vertices."""
    a = _vec(x)
    c = np.concatenate(([0.0], np.cumsum(a)))
    # <x, window [i,j)> = c[j] - c[i]; max abs difference of cumulative sums
    return float(c.max() - c.min())


def comass_flat(rows) -> float:
    """max over nonempty subsets I of |sum_{i in I} rows_i|_2.

    rows is an (n-1, 2) array of the matrix field's rows at one point.
    A candidate satisfies the flat comass bound iff the result is <= 1.
    """
    R = np.asarray(rows, dtype=float).reshape(-1, 2)
    d = R.shape[0]
    if d > 20:
        raise ValueError("subset enumeration capped at n-1 <= 20")
    best = 0.0
    for mask in range(1, 1 << d):
        s = np.zeros(2)
        m = mask
        i = 0
        while m:
            if m & 1:
                s += R[i]
            m >>= 1
            i += 1
        best = max(best, float(np.hypot(s[0], s[1])))
    return best


def comass_natural(rows) -> float:
    """max over contiguous ranges i..j-1 of |sum rows_k|_2."""
    R = np.asarray(rows, dtype=float).reshape(-1, 2)
    c = np.vstack([np.zeros(2), np.cumsum(R, axis=0)])
    best = 0.0
    d = R.shape[0]
    for i in range(d):
        for j in range(i + 1, d + 1):
            s = c[j] - c[i]
            best = max(best, float(np.hypot(s[0], s[1])))
    return best


def comass(rows, kind: NormKind) -> float:
    return comass_flat(rows) if NormKind(kind) == NormKind.flat else comass_natural(rows)


def comass_verdict(value: float, tol: float = LP_TOL) -> str:
    """Three-valued verdict for a comass check against the bound 1."""
    if value <= 1.0 - tol:
        return "pass"
    if value <= 1.0 + tol:
        return "marginal"
    return "fail"


def group_norm(x, kind: NormKind) -> float:
    return norm_flat(x) if NormKind(kind) == NormKind.flat else norm_natural(x)


def norm_by_duality_lp(x, kind: NormKind) -> float:
    """Recover the norm as max <x,y> over the dual unit ball, by LP.

    Used as an independent duality-round-trip oracle in tests.
    """
    a = _vec(x)
    d = a.size
    if NormKind(kind) == NormKind.flat:
        # dual ball: sum(y+) <= 1 and sum(y-) <= 1; variables y = yp - ym
        c = np.concatenate([-a, a])
        A = np.block([[np.ones(d), np.zeros(d)], [np.zeros(d), np.ones(d)]])
        res = linprog(c, A_ub=A, b_ub=[1.0, 1.0], bounds=[(0, None)] * (2 * d), method="highs")
    else:
        # dual ball: |<y, v>| <= 1 for all contiguous-subsum vertices v
        V = np.stack(natural_ball_vertices(d + 1), axis=0)
        res = linprog(-a, A_ub=V, b_ub=np.ones(V.shape[0]),
                      bounds=[(None, None)] * d, method="highs")
    if not res.success:
        raise LPFailure(f"duality LP failed: {res.message}")
    return float(-res.fun)
