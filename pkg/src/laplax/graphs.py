"""Weighted multigraph substrate.

Everything downstream (decomposition, low-stretch subgraphs, sparsification,
elimination, the solver chain) runs on one graph type: an undirected weighted
multigraph with *stable edge identities*.  Edge ids survive contraction, so
weight-class membership and stretch provenance can always be traced back to
the original edges of the input graph.

Two metrics coexist deliberately: decomposition uses hop counts only
(weights ignored), while stretch accounting uses weighted shortest paths.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph


class DisconnectedSubgraphError(ValueError):
    """A subgraph fails to connect two endpoints of a graph edge."""

    def __init__(self, u: int, v: int):
        super().__init__(f"no subgraph path between vertices {u} and {v}")
        self.witness = (u, v)


class WeightedMultigraph:
    """Undirected weighted multigraph with stable edge ids.

    Invariants: weights strictly positive and finite, no self-loops,
    parallel edges allowed and individually addressable by eid.  Instances
    are immutable after construction and safe for concurrent reads.
    Adjacency is ordered by eid so every traversal is reproducible.
    """

    __slots__ = ("n", "eu", "ev", "ew", "eids", "_indptr", "_nbr", "_adj_eidx",
                 "_eid_to_idx")

    def __init__(self, n: int, eu, ev, ew, eids):
        eu = np.asarray(eu, dtype=np.int64)
        ev = np.asarray(ev, dtype=np.int64)
        ew = np.asarray(ew, dtype=np.float64)
        eids = np.asarray(eids, dtype=np.int64)
        if not (len(eu) == len(ev) == len(ew) == len(eids)):
            raise ValueError("edge arrays must have equal length")
        if n < 0:
            raise ValueError("vertex count must be nonnegative")
        if len(eu) and (eu.min() < 0 or ev.min() < 0 or max(eu.max(), ev.max()) >= n):
            raise ValueError("edge endpoint out of range")
        if np.any(eu == ev):
            raise ValueError("self-loops are not stored")
        if len(ew) and (not np.all(np.isfinite(ew)) or ew.min() <= 0.0):
            raise ValueError("weights must be strictly positive and finite")
        if len(eids) != len(np.unique(eids)):
            raise ValueError("edge ids must be unique")
        # canonical order: by eid
        order = np.argsort(eids, kind="stable")
        self.n = int(n)
        self.eu = eu[order]
        self.ev = ev[order]
        self.ew = ew[order]
        self.eids = eids[order]
        # CSR adjacency over edge *indices*; within a vertex, neighbors are
        # listed in eid order because edges are already eid-sorted.
        m = len(self.eids)
        src = np.concatenate([self.eu, self.ev])
        dst = np.concatenate([self.ev, self.eu])
        eidx = np.concatenate([np.arange(m), np.arange(m)])
        order2 = np.argsort(src, kind="stable")
        src, dst, eidx = src[order2], dst[order2], eidx[order2]
        counts = np.bincount(src, minlength=n).astype(np.int64)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        self._indptr = indptr
        self._nbr = dst
        self._adj_eidx = eidx
        self._eid_to_idx = {int(e): i for i, e in enumerate(self.eids)}

    # -- construction --------------------------------------------------------

    @classmethod
    def from_edges(cls, n: int, edges) -> "WeightedMultigraph":
        """Build from (u, v, w) triples; eids are assigned 0..m-1 in order."""
        edges = list(edges)
        if not edges:
            return cls(n, [], [], [], [])
        eu, ev, ew = zip(*edges)
        return cls(n, eu, ev, ew, np.arange(len(edges)))

    # -- basic accessors -----------------------------------------------------

    @property
    def m(self) -> int:
        return len(self.eids)

    def degree(self, v: int) -> int:
        return int(self._indptr[v + 1] - self._indptr[v])

    def degrees(self) -> np.ndarray:
        return np.diff(self._indptr)

    def incident(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        """(neighbor vertices, edge indices) for ``v``, in eid order."""
        lo, hi = self._indptr[v], self._indptr[v + 1]
        return self._nbr[lo:hi], self._adj_eidx[lo:hi]

    def edge_index(self, eid: int) -> int:
        return self._eid_to_idx[int(eid)]

    def edge_tuples(self):
        """Iterate (u, v, w, eid) in eid order."""
        for i in range(self.m):
            yield int(self.eu[i]), int(self.ev[i]), float(self.ew[i]), int(self.eids[i])

    def total_weight(self) -> float:
        return float(self.ew.sum())

    # -- structure checks ----------------------------------------------------

    def validate(self) -> None:
        """Re-assert construction invariants (adjacency consistent with edges)."""
        counts = np.bincount(np.concatenate([self.eu, self.ev]), minlength=self.n)
        if not np.array_equal(counts, self.degrees()):
            raise AssertionError("adjacency index inconsistent with edge list")

    def components(self) -> np.ndarray:
        """Connected-component label per vertex (labels are 0..c-1)."""
        if self.n == 0:
            return np.zeros(0, dtype=np.int64)
        pat = sp.csr_matrix(
            (np.ones(2 * self.m), (np.concatenate([self.eu, self.ev]),
                                   np.concatenate([self.ev, self.eu]))),
            shape=(self.n, self.n))
        _, labels = csgraph.connected_components(pat, directed=False)
        return labels.astype(np.int64)

    def num_components(self) -> int:
        return int(self.components().max() + 1) if self.n else 0

    # -- derived graphs ------------------------------------------------------

    def edge_subgraph(self, eids) -> "WeightedMultigraph":
        """Same vertex set, only the given edge ids."""
        keep = np.asarray(sorted(int(e) for e in eids), dtype=np.int64)
        idx = np.array([self._eid_to_idx[int(e)] for e in keep], dtype=np.int64)
        return WeightedMultigraph(self.n, self.eu[idx], self.ev[idx],
                                  self.ew[idx], self.eids[idx])

    def scaled(self, factor: float) -> "WeightedMultigraph":
        return WeightedMultigraph(self.n, self.eu, self.ev, self.ew * factor, self.eids)

    def hop_csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(indptr, neighbors, edge indices) of the adjacency structure."""
        return self._indptr, self._nbr, self._adj_eidx

    def distance_csr(self) -> sp.csr_matrix:
        """CSR with the minimum weight per vertex pair (for shortest paths)."""
        if self.m == 0:
            return sp.csr_matrix((self.n, self.n))
        a = np.minimum(self.eu, self.ev)
        b = np.maximum(self.eu, self.ev)
        order = np.lexsort((b, a))
        a, b, w = a[order], b[order], self.ew[order]
        new = np.ones(len(a), dtype=bool)
        new[1:] = (a[1:] != a[:-1]) | (b[1:] != b[:-1])
        group = np.cumsum(new) - 1
        wmin = np.full(group[-1] + 1, np.inf)
        np.minimum.at(wmin, group, w)
        ua, ub = a[new], b[new]
        mat = sp.csr_matrix(
            (np.concatenate([wmin, wmin]),
             (np.concatenate([ua, ub]), np.concatenate([ub, ua]))),
            shape=(self.n, self.n))
        return mat


# -- Laplacian view ----------------------------------------------------------


def laplacian(g: WeightedMultigraph) -> sp.csr_matrix:
    """Graph Laplacian; parallel edges collapse by weight summation."""
    if g.m == 0:
        return sp.csr_matrix((g.n, g.n))
    rows = np.concatenate([g.eu, g.ev, g.eu, g.ev])
    cols = np.concatenate([g.ev, g.eu, g.eu, g.ev])
    vals = np.concatenate([-g.ew, -g.ew, g.ew, g.ew])
    return sp.csr_matrix((vals, (rows, cols)), shape=(g.n, g.n))


def quad_form(g: WeightedMultigraph, x: np.ndarray) -> float:
    """Sum of w_e * (x_u - x_v)^2 over all edges."""
    d = x[g.eu] - x[g.ev]
    return float(np.dot(g.ew, d * d))


# -- BFS ball growing --------------------------------------------------------


@dataclass(frozen=True)
class Ball:
    """Hop-distance ball with its BFS parents and level count."""

    vertices: frozenset
    parents: dict
    rounds: int

    def __contains__(self, v: int) -> bool:
        return v in self.vertices


def bfs_ball(g: WeightedMultigraph, s: int, r: float,
             active: np.ndarray | None = None) -> Ball:
    """All vertices within hop distance ``r`` of ``s``, level-synchronously.

    ``active`` optionally restricts the traversal to an induced subgraph.
    The rounds counter equals the number of BFS levels expanded.  The parent
    map realizes shortest hop paths; ties resolve in eid order.
    """
    if not (0 <= s < g.n):
        raise ValueError(f"source {s} out of range")
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if active is not None and not active[s]:
        raise ValueError("source is not active")
    indptr, nbr, _ = g.hop_csr()
    seen = np.zeros(g.n, dtype=bool)
    seen[s] = True
    parents: dict[int, int] = {}
    frontier = np.array([s], dtype=np.int64)
    rounds = 0
    depth = 0
    members = [frontier]
    while len(frontier) and depth < r:
        starts = indptr[frontier]
        stops = indptr[frontier + 1]
        reps = (stops - starts).astype(np.int64)
        if reps.sum() == 0:
            break
        idx = np.concatenate([np.arange(a, b) for a, b in zip(starts, stops)])
        cand = nbr[idx]
        src = np.repeat(frontier, reps)
        ok = ~seen[cand]
        if active is not None:
            ok &= active[cand]
        cand, src = cand[ok], src[ok]
        # first hit wins; duplicates resolve to the earliest (eid-ordered) entry
        uniq, first = np.unique(cand, return_index=True)
        for v, u in zip(uniq, src[first]):
            parents[int(v)] = int(u)
        seen[uniq] = True
        frontier = uniq
        depth += 1
        if len(uniq):
            rounds += 1
            members.append(uniq)
    verts = frozenset(int(v) for part in members for v in part)
    return Ball(verts, parents, rounds)


# -- weight classes ----------------------------------------------------------


@dataclass
class EdgeClassedGraph:
    """A multigraph with its edges bucketed into geometric weight classes.

    Class ``i`` holds edges with w in [z^(i-1), z^i).  ``generic`` is the
    optional catch-all bucket of classes older than the active window.
    """

    base: WeightedMultigraph
    z: float
    classes: dict = field(default_factory=dict)   # class index -> np.ndarray of eids
    generic: np.ndarray | None = None

    def class_count(self) -> int:
        """Number of nonempty classes, counting the generic bucket as one."""
        k = sum(1 for eids in self.classes.values() if len(eids))
        if self.generic is not None and len(self.generic):
            k += 1
        return max(1, k)

    def all_eids(self) -> np.ndarray:
        parts = [np.asarray(v, dtype=np.int64) for v in self.classes.values()]
        if self.generic is not None:
            parts.append(np.asarray(self.generic, dtype=np.int64))
        if not parts:
            return np.zeros(0, dtype=np.int64)
        return np.sort(np.concatenate(parts))

    def validate(self) -> None:
        eids = self.all_eids()
        if not np.array_equal(eids, self.base.eids):
            raise AssertionError("classes do not partition the edge set")
        for i, class_eids in self.classes.items():
            for e in class_eids:
                w = self.base.ew[self.base.edge_index(e)]
                if not (self.z ** (i - 1) <= w < self.z ** i):
                    raise AssertionError(f"edge {e} outside class {i}")


def class_of_weight(w: float, z: float) -> int:
    """Class index i with w in [z^(i-1), z^i); robust at boundaries."""
    i = int(math.floor(math.log(w) / math.log(z))) + 1
    while z ** (i - 1) > w:
        i -= 1
    while w >= z ** i:
        i += 1
    return i


def weight_classes(g: WeightedMultigraph, z: float) -> EdgeClassedGraph:
    """Bucket edges by weight: class i gets w in [z^(i-1), z^i).

    Requires normalized weights (all >= 1) and z > 1.
    """
    if z <= 1:
        raise ValueError("class base z must exceed 1")
    if g.m and g.ew.min() < 1.0:
        raise ValueError("weights must be normalized to >= 1 before classing")
    buckets: dict[int, list[int]] = {}
    for i in range(g.m):
        c = class_of_weight(float(g.ew[i]), z)
        buckets.setdefault(c, []).append(int(g.eids[i]))
    classes = {c: np.array(sorted(v), dtype=np.int64) for c, v in sorted(buckets.items())}
    return EdgeClassedGraph(base=g, z=z, classes=classes)


def normalize_weights(g: WeightedMultigraph) -> tuple[WeightedMultigraph, float]:
    """Divide all weights by the minimum; returns (graph, scale factor)."""
    if g.m == 0:
        return g, 1.0
    scale = float(g.ew.min())
    return WeightedMultigraph(g.n, g.eu, g.ev, g.ew / scale, g.eids), scale


# -- contraction -------------------------------------------------------------


def contract(g: WeightedMultigraph, assignment) -> tuple[WeightedMultigraph, dict]:
    """Quotient multigraph under a total vertex -> component assignment.

    Intra-component edges drop (self-loop removal); surviving edges keep
    their weight and eid, parallel edges included.  Component ids are
    relabeled to 0..p-1 in increasing order of the original ids.  Returns
    the quotient and a map eid -> (quotient u, quotient v) for survivors.
    """
    assignment = np.asarray(assignment, dtype=np.int64)
    if len(assignment) != g.n:
        raise ValueError("assignment must cover every vertex")
    labels = np.unique(assignment)
    relabel = {int(c): i for i, c in enumerate(labels)}
    comp = np.array([relabel[int(c)] for c in assignment], dtype=np.int64)
    cu, cv = comp[g.eu], comp[g.ev]
    keep = cu != cv
    survived = WeightedMultigraph(len(labels), cu[keep], cv[keep],
                                  g.ew[keep], g.eids[keep])
    survival = {int(e): (int(a), int(b))
                for e, a, b in zip(g.eids[keep], cu[keep], cv[keep])}
    return survived, survival


# -- stretch accounting ------------------------------------------------------


def subgraph_distances(g: WeightedMultigraph, sub_eids, sources=None) -> np.ndarray:
    """Weighted shortest-path distances over the subgraph ``sub_eids``."""
    h = g.edge_subgraph(sub_eids)
    mat = h.distance_csr()
    return csgraph.dijkstra(mat, directed=False, indices=sources)


def per_edge_stretch(g: WeightedMultigraph, sub_eids) -> np.ndarray:
    """Stretch d_H(u, v) / w(e) of every edge of ``g`` w.r.t. subgraph H.

    Raises :class:`DisconnectedSubgraphError` with a witness pair when some
    graph edge has no subgraph path.
    """
    if g.m == 0:
        return np.zeros(0)
    sources = np.unique(g.eu)
    dist = subgraph_distances(g, sub_eids, sources=sources)
    row = {int(s): k for k, s in enumerate(sources)}
    d = np.array([dist[row[int(u)], int(v)] for u, v in zip(g.eu, g.ev)])
    if np.any(~np.isfinite(d)):
        bad = int(np.nonzero(~np.isfinite(d))[0][0])
        raise DisconnectedSubgraphError(int(g.eu[bad]), int(g.ev[bad]))
    return d / g.ew


def total_stretch(g: WeightedMultigraph, sub_eids) -> float:
    """Exact total stretch of ``g`` with respect to the subgraph ``sub_eids``."""
    return float(per_edge_stretch(g, sub_eids).sum())
