"""Greedy elimination: exact partial Cholesky on degree-1/degree-2 vertices.

Rounds alternate raking leaves and splicing out an independent set of
degree-2 vertices chosen by a coin protocol (heads with probability 1/3,
marked iff heads and no coin-flipping neighbor came up heads).  A splice
replaces edges (v,a,w1), (v,b,w2) by (a,b) with the series weight
w1*w2/(w1+w2); parallel edges merge by weight addition.  Elimination is
exact arithmetic: replaying the pivot log reproduces the reduced graph, and
back-substitution recovers the solution on the original vertex set.

Parallel edges of the input merge eagerly (their Laplacian is identical),
which also turns the degenerate "degree-2 vertex with both edges to the
same neighbor" case into a plain rake.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .graphs import WeightedMultigraph
from .rng import make_rng


@dataclass(frozen=True)
class Degree1Pivot:
    v: int
    nbr: int
    w: float


@dataclass(frozen=True)
class Degree2Pivot:
    v: int
    left: int
    right: int
    w_left: float
    w_right: float
    new_eid: int   # id of the replacement edge (existing id when merged)


Pivot = Degree1Pivot | Degree2Pivot


def splice_weight(w1: float, w2: float) -> float:
    """Series weight of two conductances: w1*w2/(w1+w2)."""
    return w1 * w2 / (w1 + w2)


@dataclass
class EliminationRecord:
    """Ordered pivot log enabling exact forward/backward substitution."""

    n_original: int
    pivots: list = field(default_factory=list)
    round_offsets: list = field(default_factory=list)   # pivot count at each round end
    kept: np.ndarray = None                             # surviving original vertex ids, sorted
    components: np.ndarray = None                       # component label per original vertex
    round_stats: list = field(default_factory=list)     # per round: {b1, b2, removed}

    def rounds(self) -> int:
        return len(self.round_offsets)

    def pivots_by_round(self):
        start = 0
        for stop in self.round_offsets:
            yield self.pivots[start:stop]
            start = stop

    def _compiled(self):
        """Per-round index arrays for vectorized substitution.

        Within a round the eliminated vertices are independent, so each
        round's rakes and splices apply as bulk scatter-adds; only the round
        sequence is ordered.  Cached after the first call.
        """
        if getattr(self, "_rounds_cache", None) is None:
            rounds = []
            for batch in self.pivots_by_round():
                rk = [(p.v, p.nbr, p.w) for p in batch if isinstance(p, Degree1Pivot)]
                sp = [(p.v, p.left, p.right, p.w_left, p.w_right)
                      for p in batch if isinstance(p, Degree2Pivot)]
                rk_arr = (np.array([r[0] for r in rk], dtype=np.int64),
                          np.array([r[1] for r in rk], dtype=np.int64),
                          np.array([r[2] for r in rk]))
                sp_arr = (np.array([s[0] for s in sp], dtype=np.int64),
                          np.array([s[1] for s in sp], dtype=np.int64),
                          np.array([s[2] for s in sp], dtype=np.int64),
                          np.array([s[3] for s in sp]),
                          np.array([s[4] for s in sp]))
                rounds.append((rk_arr, sp_arr))
            self._rounds_cache = rounds
        return self._rounds_cache

    def forward_rhs(self, b: np.ndarray) -> tuple[np.ndarray, list]:
        """Push b through the pivots; returns (reduced rhs, per-round betas)."""
        if len(b) != self.n_original:
            raise ValueError("rhs length does not match the original graph")
        bw = np.array(b, dtype=np.float64)
        betas = []
        for rk, sp in self._compiled():
            rv, rn, rw = rk
            sv, sl, sr, wl, wr = sp
            beta_r = bw[rv].copy()
            beta_s = bw[sv].copy()
            betas.append((beta_r, beta_s))
            if len(rv):
                np.add.at(bw, rn, beta_r)
            if len(sv):
                tot = wl + wr
                np.add.at(bw, sl, wl / tot * beta_s)
                np.add.at(bw, sr, wr / tot * beta_s)
        return bw[self.kept], betas


def eliminate_solve(record: EliminationRecord, x_reduced: np.ndarray,
                    b: np.ndarray) -> np.ndarray:
    """Back-substitute a reduced solution to the original vertex set.

    ``x_reduced`` must solve the reduced Laplacian against the rhs produced
    by ``record.forward_rhs(b)``.
    """
    if record.kept is None:
        raise ValueError("record has no surviving-vertex map")
    if len(x_reduced) != len(record.kept):
        raise ValueError("reduced solution does not match the record")
    _, betas = record.forward_rhs(b)
    x = np.zeros(record.n_original)
    x[record.kept] = x_reduced
    compiled = record._compiled()
    for r in range(len(compiled) - 1, -1, -1):
        (rv, rn, rw), (sv, sl, sr, wl, wr) = compiled[r]
        beta_r, beta_s = betas[r]
        if len(sv):
            tot = wl + wr
            x[sv] = (wl * x[sl] + wr * x[sr] + beta_s) / tot
        if len(rv):
            x[rv] = x[rn] + beta_r / rw
    if record.components is not None:
        for c in range(int(record.components.max()) + 1):
            idx = record.components == c
            x[idx] -= x[idx].mean()
    return x


def _merged_adjacency(g: WeightedMultigraph):
    """Simple-graph adjacency dicts with parallel edges merged by addition."""
    adj: list[dict[int, float]] = [dict() for _ in range(g.n)]
    pair_eid: dict[tuple[int, int], int] = {}
    for u, v, w, eid in g.edge_tuples():
        if v in adj[u]:
            adj[u][v] += w
            adj[v][u] += w
        else:
            adj[u][v] = w
            adj[v][u] = w
            pair_eid[(min(u, v), max(u, v))] = eid
    return adj, pair_eid


def greedy_elimination(g: WeightedMultigraph, seed: int = 0
                       ) -> tuple[WeightedMultigraph, EliminationRecord]:
    """Eliminate degree-1/2 vertices until at most max(c, 2m-2) remain.

    Here m is the current count of edges beyond a spanning forest and c the
    number of connected components; a forest eliminates down to one vertex
    per component.  Pivots within one round touch an independent vertex set,
    so the rounds are genuine parallel steps.
    """
    rng = make_rng(seed, "eliminate")
    adj, pair_eid = _merged_adjacency(g)
    alive = np.ones(g.n, dtype=bool)
    n_cur = g.n
    e_cur = sum(len(a) for a in adj) // 2
    labels = g.components()
    n_comp = int(labels.max()) + 1 if g.n else 0
    next_eid = int(g.eids.max()) + 1 if g.m else 0
    record = EliminationRecord(n_original=g.n, components=labels)

    def target() -> int:
        extra = e_cur - n_cur + n_comp
        return max(n_comp, 2 * extra - 2)

    def rake(v: int):
        nonlocal n_cur, e_cur
        (u, w), = adj[v].items()
        record.pivots.append(Degree1Pivot(v=v, nbr=u, w=w))
        del adj[u][v]
        adj[v].clear()
        alive[v] = False
        n_cur -= 1
        e_cur -= 1

    def splice(v: int):
        nonlocal n_cur, e_cur, next_eid
        (a, wa), (b, wb) = sorted(adj[v].items())
        wnew = splice_weight(wa, wb)
        del adj[a][v]
        del adj[b][v]
        adj[v].clear()
        alive[v] = False
        n_cur -= 1
        e_cur -= 2
        if b in adj[a]:
            adj[a][b] += wnew
            adj[b][a] += wnew
            eid = pair_eid[(min(a, b), max(a, b))]
        else:
            adj[a][b] = wnew
            adj[b][a] = wnew
            eid = next_eid
            pair_eid[(min(a, b), max(a, b))] = eid
            next_eid += 1
            e_cur += 1
        record.pivots.append(Degree2Pivot(v=v, left=a, right=b,
                                          w_left=wa, w_right=wb, new_eid=eid))

    max_rounds = 64 * _ceil_log2(max(g.n, 2)) + 64
    while n_cur > target():
        if record.rounds() >= max_rounds:
            raise RuntimeError("elimination failed to make progress")
        live = np.nonzero(alive)[0]
        leaves = sorted(int(v) for v in live if len(adj[int(v)]) == 1)
        leafset = set(leaves)
        # an isolated edge rakes only its smaller end; the larger one survives
        rake_list = [v for v in leaves
                     if not (next(iter(adj[v])) in leafset and next(iter(adj[v])) < v)]
        deg2 = sorted(int(v) for v in live if len(adj[int(v)]) == 2)
        heads = {v: bool(h) for v, h in zip(deg2, rng.random(len(deg2)) < (1.0 / 3.0))}
        # marked iff heads, no flipping neighbor with heads, and no neighbor
        # being raked this round (keeps the eliminated set independent)
        marked = [v for v in deg2
                  if heads[v]
                  and not any(heads.get(u, False) for u in adj[v])
                  and not any(u in leafset for u in adj[v])]
        removed_before = n_cur
        for v in rake_list:
            rake(v)
        for v in marked:
            splice(v)
        record.round_offsets.append(len(record.pivots))
        record.round_stats.append({"b1": len(leaves), "b2": len(deg2),
                                   "removed": removed_before - n_cur})
    kept = np.nonzero(alive)[0].astype(np.int64)
    record.kept = kept
    pos = {int(v): i for i, v in enumerate(kept)}
    edges = []
    for u in kept:
        for v, w in adj[int(u)].items():
            if int(u) < v:
                edges.append((pos[int(u)], pos[v], w))
    edges.sort()
    reduced = WeightedMultigraph.from_edges(len(kept), edges)
    return reduced, record


def _ceil_log2(n: int) -> int:
    return max(1, math.ceil(math.log2(n)))
