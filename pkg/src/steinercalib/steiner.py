"""Exact small-n Steiner minimal tree oracle.

Full topologies (every junction degree 3, terminals degree 1) are enumerated
by recursive edge insertion, giving (2n-5)!! labeled topologies; degenerate
optima are reached inside a full topology when junction positions collapse
onto terminals or onto each other, so no separate contracted enumeration is
needed. Junction positions are optimized by Weiszfeld-style sweeps with an
annealed length regularization (the objective is convex but nonsmooth where
edges degenerate).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial.distance import pdist, squareform

from .geometry import PointConfig, Vec2

MAX_TERMINALS = 7


class TooManyTerminals(ValueError):
    pass


class NoConvergence(RuntimeError):
    pass


@dataclass(frozen=True)
class Topology:
    """Tree on nodes 0..n-1 (terminals) and n..n+k-1 (junctions)."""

    n_terminals: int
    n_junctions: int
    edges: tuple  # tuple of (u, v) with u < v

    def adjacency(self):
        adj = {i: [] for i in range(self.n_terminals + self.n_junctions)}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def validate(self):
        n, k = self.n_terminals, self.n_junctions
        assert len(self.edges) == n + k - 1 <= 2 * n - 3
        adj = self.adjacency()
        for t in range(n):
            assert len(adj[t]) == 1, "terminal degree must be 1"
        for j in range(n, n + k):
            assert len(adj[j]) == 3, "junction degree must be 3"


@dataclass
class SteinerTree:
    topology: Topology
    junctions: list  # list of Vec2
    length: float

    def nodes(self, config: PointConfig):
        return list(config.points) + list(self.junctions)

    def edge_segments(self, config: PointConfig):
        pts = self.nodes(config)
        return [(pts[u], pts[v]) for u, v in self.topology.edges]


def enumerate_topologies(n: int) -> list[Topology]:
    """All full Steiner topologies for n terminals ((2n-5)!! of them; one bare
    segment for n = 2)."""
    if n < 2:
        raise ValueError("n >= 2 required")
    if n > MAX_TERMINALS:
        raise TooManyTerminals(f"n = {n} exceeds cap {MAX_TERMINALS}")
    if n == 2:
        return [Topology(2, 0, ((0, 1),))]
    # start from the single topology on terminals {0,1,2} with junction n
    base = [((0, n), (1, n), (2, n))]
    topos = base
    for t in range(3, n):
        new_junction = n + (t - 2)
        grown = []
        for edges in topos:
            for i, (u, v) in enumerate(edges):
                rest = edges[:i] + edges[i + 1:]
                grown.append(rest + ((u, new_junction), (v, new_junction),
                                     (t, new_junction)))
        topos = grown
    out = []
    for edges in topos:
        norm_edges = tuple(sorted((min(u, v), max(u, v)) for u, v in edges))
        out.append(Topology(n, n - 2, norm_edges))
        out[-1].validate()
    return out


def _tree_length(P, edges, eps=0.0):
    d = P[[u for u, v in edges]] - P[[v for u, v in edges]]
    L = np.sqrt((d * d).sum(axis=1) + eps * eps)
    return float(L.sum())


def _smoothed_length_grad(x, T, k, edges, eps):
    """Value and junction gradient of sum_e sqrt(|e|^2 + eps^2)."""
    P = np.vstack([T, x.reshape(k, 2)])
    n = T.shape[0]
    U = np.array([u for u, v in edges])
    V = np.array([v for u, v in edges])
    D = P[U] - P[V]
    L = np.sqrt((D * D).sum(axis=1) + eps * eps)
    G = np.zeros_like(P)
    W = D / L[:, None]
    np.add.at(G, U, W)
    np.add.at(G, V, -W)
    return float(L.sum()), G[n:].ravel()


def optimize_junctions(topology: Topology, config: PointConfig, tol: float = 1e-9,
                       initial=None, max_sweeps: int = 2000) -> SteinerTree:
    """Minimize total length over junction positions.

    Weiszfeld sweeps with an annealed edge-length regularization provide the
    warm start; a quasi-Newton descent on the smoothed length (regularization
    annealed to 1e-12 of the configuration scale) polishes to tolerance.
    Deterministic: junctions start at the terminal centroid unless `initial`
    is given.
    """
    n, k = topology.n_terminals, topology.n_junctions
    T = np.array([p.as_tuple() for p in config.points], dtype=float)
    scale = max(np.ptp(T[:, 0]), np.ptp(T[:, 1]), 1e-30)
    if k == 0:
        return SteinerTree(topology, [], _tree_length(T, topology.edges))
    if initial is None:
        J = np.repeat(T.mean(axis=0, keepdims=True), k, axis=0)
        J += 1e-9 * scale * np.arange(k)[:, None]  # break exact ties
    else:
        J = np.array([p.as_tuple() for p in initial], dtype=float)
    adj = topology.adjacency()
    P = np.vstack([T, J])
    eps_reg = 1e-6 * scale
    for sweep in range(max_sweeps):
        moved = 0.0
        for j in range(n, n + k):
            num = np.zeros(2)
            den = 0.0
            for u in adj[j]:
                d = math.hypot(P[j, 0] - P[u, 0], P[j, 1] - P[u, 1])
                w = 1.0 / max(d, eps_reg)
                num += w * P[u]
                den += w
            new = num / den
            moved = max(moved, math.hypot(new[0] - P[j, 0], new[1] - P[j, 1]))
            P[j] = new
        if moved < 1e-3 * eps_reg:
            if eps_reg <= 1e-9 * scale:
                break
            eps_reg *= 0.1
    from scipy.optimize import minimize

    x = P[n:].ravel().copy()
    for eps in (1e-9 * scale, 1e-12 * scale):
        res = minimize(_smoothed_length_grad, x, args=(T, k, topology.edges, eps),
                       jac=True, method="L-BFGS-B",
                       options={"maxiter": 2000, "ftol": 1e-18, "gtol": 1e-12})
        x = res.x
    P[n:] = x.reshape(k, 2)
    grad_norm = float(np.abs(_smoothed_length_grad(x, T, k, topology.edges,
                                                   1e-12 * scale)[1]).max())
    if not np.isfinite(grad_norm):
        raise NoConvergence("junction optimization diverged")
    length = _tree_length(P, topology.edges)
    junctions = [Vec2(*P[j]) for j in range(n, n + k)]
    return SteinerTree(topology, junctions, length)


def steiner_minimal_tree(config: PointConfig, tol: float = 1e-9) -> SteinerTree:
    """Minimum over all enumerated topologies; ties broken by enumeration order."""
    best = None
    for topo in enumerate_topologies(config.n):
        tree = optimize_junctions(topo, config, tol=tol)
        if best is None or tree.length < best.length - 0.0:
            best = tree
    return best


def euclidean_mst_length(config: PointConfig) -> float:
    """Independent upper bound: Euclidean minimum spanning tree length."""
    P = np.array([p.as_tuple() for p in config.points])
    D = squareform(pdist(P))
    return float(minimum_spanning_tree(D).sum())


def junction_angles(tree: SteinerTree, config: PointConfig, min_edge=1e-9):
    """Pairwise angles (degrees) between incident edge directions at each
    junction, skipping edges shorter than min_edge."""
    pts = tree.nodes(config)
    adj = tree.topology.adjacency()
    n = tree.topology.n_terminals
    out = []
    for j in range(n, n + tree.topology.n_junctions):
        dirs = []
        for u in adj[j]:
            d = pts[u] - pts[j]
            if d.norm() > min_edge:
                dirs.append(d.unit())
        angles = []
        for a, b in itertools.combinations(dirs, 2):
            angles.append(math.degrees(math.acos(max(-1.0, min(1.0, a.dot(b))))))
        out.append(angles)
    return out


def tree_path(tree: SteinerTree, config: PointConfig, src: int, dst: int):
    """Node-index path between two nodes of the tree (unique)."""
    adj = tree.topology.adjacency()
    prev = {src: None}
    stack = [src]
    while stack:
        u = stack.pop()
        if u == dst:
            break
        for v in adj[u]:
            if v not in prev:
                prev[v] = u
                stack.append(v)
    path = [dst]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path[::-1]
