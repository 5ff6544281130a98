"""Independent reference implementations used by tests and checked mode.

These are deliberately written against different primitives than the
production code they audit: shortest paths use a hand-rolled heap Dijkstra
instead of scipy's, the pseudoinverse solve uses a dense rank-one-shifted
LU instead of the solver's per-component Cholesky, and the sequential
decomposition re-derives per-center balls instead of the multi-source wave.
Correctness anchors only; performance is a non-goal.
"""

from __future__ import annotations

from dataclasses import dataclass
import heapq
import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph

from .decompose import Decomposition, SplitParams
from .eliminate import Degree1Pivot, EliminationRecord
from .graphs import WeightedMultigraph, laplacian
from .rng import make_rng

DENSE_CEILING = 3000


# -- dense pseudoinverse solve -------------------------------------------------


def _as_dense_laplacian(a) -> np.ndarray:
    if isinstance(a, WeightedMultigraph):
        return laplacian(a).toarray()
    if sp.issparse(a):
        return a.toarray()
    return np.asarray(a, dtype=np.float64)


def _component_labels(dense: np.ndarray) -> np.ndarray:
    pattern = sp.csr_matrix((np.abs(dense) > 0).astype(float))
    _, labels = csgraph.connected_components(pattern, directed=False)
    return labels


def dense_pinv_solve(lap, b: np.ndarray, ceiling: int = DENSE_CEILING) -> np.ndarray:
    """Exact pseudoinverse application with per-component nullspace projection.

    Solves via a dense LU on the Laplacian plus a rank-one shift on each
    component's all-ones direction, which acts as the pseudoinverse on the
    projected right-hand side.
    """
    dense = _as_dense_laplacian(lap)
    n = dense.shape[0]
    if n > ceiling:
        raise ValueError(f"dense ceiling exceeded: {n} > {ceiling}")
    if dense.shape != (n, n) or len(b) != n:
        raise ValueError("dimension mismatch")
    labels = _component_labels(dense)
    x = np.zeros(n)
    scale = max(np.trace(dense) / max(n, 1), 1.0)
    for c in range(labels.max() + 1):
        idx = np.nonzero(labels == c)[0]
        if len(idx) == 1:
            continue
        sub = dense[np.ix_(idx, idx)]
        bc = b[idx] - b[idx].mean()
        shifted = sub + scale / len(idx) * np.ones_like(sub)
        xc = np.linalg.solve(shifted, bc)
        x[idx] = xc - xc.mean()
    return x


# -- generalized eigenvalue bounds of a pencil --------------------------------


@dataclass(frozen=True)
class DensePencilBounds:
    """Extreme finite generalized eigenvalues of (L_H, L_G) on the joint range."""

    lambda_min: float
    lambda_max: float

    def sandwiched(self, kappa: float, tol: float = 1e-9) -> bool:
        return self.lambda_min >= 1.0 - tol and self.lambda_max <= kappa * (1.0 + tol)


def pencil_bounds(h, g, tol: float = 1e-10) -> DensePencilBounds:
    """lambda_min/max of x'L_H x / x'L_G x over the range of L_G.

    Requires the nullspace of G to be contained in that of H (true whenever
    H's edges stay within G's connected components).
    """
    lh = _as_dense_laplacian(h)
    lg = _as_dense_laplacian(g)
    if lh.shape != lg.shape:
        raise ValueError("pencil matrices must share the vertex set")
    evals, evecs = np.linalg.eigh(lg)
    cut = tol * max(evals.max(), 1.0)
    keep = evals > cut
    null = evecs[:, ~keep]
    if null.size and np.abs(lh @ null).max() > 1e-8 * max(np.abs(lh).max(), 1.0):
        raise ValueError("H has energy outside the range of G")
    w = evecs[:, keep] / np.sqrt(evals[keep])
    m = w.T @ lh @ w
    m = 0.5 * (m + m.T)
    lam = np.linalg.eigvalsh(m)
    return DensePencilBounds(float(lam.min()), float(lam.max()))


def rayleigh_probes(h, g, count: int, seed: int) -> np.ndarray:
    """Random Rayleigh quotients of the (H, G) pencil; all lie inside the bounds."""
    lh = _as_dense_laplacian(h)
    lg = _as_dense_laplacian(g)
    rng = make_rng(seed, "rayleigh")
    out = np.empty(count)
    n = lh.shape[0]
    k = 0
    while k < count:
        x = rng.standard_normal(n)
        x -= x.mean()
        denom = x @ lg @ x
        if denom <= 1e-12:
            continue
        out[k] = (x @ lh @ x) / denom
        k += 1
    return out


# -- shortest paths ------------------------------------------------------------


def dijkstra_from(g: WeightedMultigraph, source: int, eids=None) -> np.ndarray:
    """Single-source weighted distances by a plain binary-heap Dijkstra."""
    allowed = None if eids is None else {int(e) for e in eids}
    dist = np.full(g.n, np.inf)
    dist[source] = 0.0
    heap = [(0.0, source)]
    done = np.zeros(g.n, dtype=bool)
    while heap:
        d, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        nbrs, eidx = g.incident(u)
        for v, ei in zip(nbrs, eidx):
            if allowed is not None and int(g.eids[ei]) not in allowed:
                continue
            nd = d + float(g.ew[ei])
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, int(v)))
    return dist


def oracle_total_stretch(g: WeightedMultigraph, sub_eids) -> float:
    """All-pairs-Dijkstra total stretch of g w.r.t. the subgraph."""
    total = 0.0
    sources = sorted(set(int(u) for u in g.eu))
    dists = {s: dijkstra_from(g, s, eids=sub_eids) for s in sources}
    for u, v, w, _eid in g.edge_tuples():
        d = dists[u][v]
        if not np.isfinite(d):
            raise ValueError(f"subgraph disconnects edge ({u}, {v})")
        total += d / w
    return total


def sequential_bfs_levels(g: WeightedMultigraph, s: int,
                          active: np.ndarray | None = None) -> np.ndarray:
    """Hop distances from s (inf when unreachable), plain FIFO BFS."""
    from collections import deque

    dist = np.full(g.n, np.inf)
    if active is not None and not active[s]:
        return dist
    dist[s] = 0
    dq = deque([s])
    while dq:
        u = dq.popleft()
        nbrs, _ = g.incident(u)
        for v in nbrs:
            if active is not None and not active[v]:
                continue
            if not np.isfinite(dist[v]):
                dist[v] = dist[u] + 1
                dq.append(int(v))
    return dist


# -- sequential re-derivation of the decomposition ----------------------------


def _bounded_bfs(g: WeightedMultigraph, s: int, radius: float,
                 active: np.ndarray) -> dict[int, int]:
    """Hop distances within ``radius`` of s over the active subgraph."""
    from collections import deque

    out = {s: 0}
    dq = deque([s])
    while dq:
        u = dq.popleft()
        if out[u] >= radius:
            continue
        nbrs, _ = g.incident(u)
        for v in nbrs:
            v = int(v)
            if active[v] and v not in out:
                out[v] = out[u] + 1
                dq.append(v)
    return out


def reference_split_graph(g: WeightedMultigraph, params: SplitParams) -> Decomposition:
    """Straight-line per-center-ball transcription of the split.

    Shares the RNG discipline with the production implementation (same seed
    derivation, same draw order) but computes each center's ball separately
    and assigns by an explicit argmin over the (distance + jitter, id) table.
    Used as the determinism oracle.
    """
    n = g.n
    if n == 0:
        raise ValueError("graph must be nonempty")
    t_max, r_jit = params.resolved(n)
    rng = make_rng(params.seed, "split")
    jitter_hi = int(math.floor(r_jit))
    active = np.ones(n, dtype=bool)
    assignment = np.full(n, -1, dtype=np.int64)
    centers_out: list[int] = []
    rounds = 0
    ln_n = math.log(max(n, 2))
    for t in range(1, t_max + 1):
        alive = np.nonzero(active)[0]
        if not len(alive):
            break
        rounds += 1
        if t == t_max:
            centers = [int(v) for v in alive]
            jitters = [0] * len(alive)
        else:
            sigma = math.ceil(params.c_sigma * n ** (t / t_max - 1.0) * len(alive) * ln_n)
            sigma = min(max(sigma, 1), len(alive))
            centers = [int(v) for v in np.sort(rng.choice(alive, size=sigma, replace=False))]
            jitters = [int(d) for d in rng.integers(0, jitter_hi + 1, size=sigma)]
        radius = min((t_max - t + 1) * r_jit, params.rho)
        best: dict[int, tuple[int, int]] = {}
        for s, delta in zip(centers, jitters):
            ball_radius = radius - delta
            if ball_radius < 0:
                continue
            for u, d in _bounded_bfs(g, s, ball_radius, active).items():
                cand = (d + delta, s)
                if u not in best or cand < best[u]:
                    best[u] = cand
        used = sorted({s for (_c, s) in best.values()})
        base = len(centers_out)
        index_of = {s: base + k for k, s in enumerate(used)}
        centers_out.extend(used)
        for u, (_c, s) in best.items():
            assignment[u] = index_of[s]
            active[u] = False
    if np.any(assignment < 0):
        raise AssertionError("reference split left vertices unassigned")
    return Decomposition(assignment=assignment,
                         centers=np.array(centers_out, dtype=np.int64),
                         rounds=rounds)


def ball_coverage_counts(g: WeightedMultigraph, params: SplitParams) -> np.ndarray:
    """How many (center, iteration) balls of radius r_t cover each vertex.

    An analysis device of the decomposition (the overlap count behind the
    cut-probability bound), exposed for empirical inspection only; no bound
    is asserted at desk scale.  Re-derives the same center/jitter stream as
    the split.
    """
    n = g.n
    t_max, r_jit = params.resolved(n)
    rng = make_rng(params.seed, "split")
    jitter_hi = int(math.floor(r_jit))
    active = np.ones(n, dtype=bool)
    counts = np.zeros(n, dtype=np.int64)
    ln_n = math.log(max(n, 2))
    for t in range(1, t_max + 1):
        alive = np.nonzero(active)[0]
        if not len(alive):
            break
        if t == t_max:
            centers = [int(v) for v in alive]
            jitters = [0] * len(alive)
        else:
            sigma = math.ceil(params.c_sigma * n ** (t / t_max - 1.0) * len(alive) * ln_n)
            sigma = min(max(sigma, 1), len(alive))
            centers = [int(v) for v in np.sort(rng.choice(alive, size=sigma, replace=False))]
            jitters = [int(d) for d in rng.integers(0, jitter_hi + 1, size=sigma)]
        radius = min((t_max - t + 1) * r_jit, params.rho)
        best: dict[int, tuple[int, int]] = {}
        for s, delta in zip(centers, jitters):
            for u in _bounded_bfs(g, s, radius, active):
                counts[u] += 1
            ball_radius = radius - delta
            if ball_radius < 0:
                continue
            for u, d in _bounded_bfs(g, s, ball_radius, active).items():
                cand = (d + delta, s)
                if u not in best or cand < best[u]:
                    best[u] = cand
        for u in best:
            active[u] = False
    return counts


def jitter_table_assignment(g: WeightedMultigraph, centers, jitters, cap: float,
                            active: np.ndarray | None = None
                            ) -> tuple[np.ndarray, np.ndarray]:
    """Brute-force argmin over the full (distance + jitter) table."""
    if active is None:
        active = np.ones(g.n, dtype=bool)
    owner = np.full(g.n, -1, dtype=np.int64)
    cost = np.full(g.n, np.inf)
    table = []
    for s, delta in zip(centers, jitters):
        if not active[s]:
            continue
        dist = sequential_bfs_levels(g, int(s), active=active)
        table.append((int(s), int(delta), dist))
    for v in range(g.n):
        if not active[v]:
            continue
        best = None
        for s, delta, dist in table:
            if np.isfinite(dist[v]):
                cand = (dist[v] + delta, s)
                if best is None or cand < best:
                    best = cand
        if best is not None and best[0] <= cap:
            cost[v] = best[0]
            owner[v] = best[1]
    return owner, cost


# -- elimination replay --------------------------------------------------------


def replay_elimination(g: WeightedMultigraph, record: EliminationRecord
                       ) -> tuple[dict, list[int]]:
    """Re-apply the pivot log on the original graph, checking every step.

    Returns the surviving merged edge map {(u, v): w} and the sorted list of
    surviving vertices; raises AssertionError when a pivot does not match
    the graph state it claims.
    """
    adj: list[dict[int, float]] = [dict() for _ in range(g.n)]
    for u, v, w, _eid in g.edge_tuples():
        adj[u][v] = adj[u].get(v, 0.0) + w
        adj[v][u] = adj[v].get(u, 0.0) + w
    alive = [True] * g.n
    for batch in record.pivots_by_round():
        batch_vertices = {p.v for p in batch}
        if len(batch_vertices) != len(batch):
            raise AssertionError("round eliminates a vertex twice")
        for p in batch:
            if any(u in batch_vertices for u in adj[p.v]):
                raise AssertionError("round eliminates two adjacent vertices")
        for p in batch:
            if not alive[p.v]:
                raise AssertionError(f"pivot on dead vertex {p.v}")
            if isinstance(p, Degree1Pivot):
                if len(adj[p.v]) != 1 or p.nbr not in adj[p.v]:
                    raise AssertionError(f"degree-1 pivot mismatch at {p.v}")
                if not math.isclose(adj[p.v][p.nbr], p.w, rel_tol=1e-12):
                    raise AssertionError(f"degree-1 weight mismatch at {p.v}")
                del adj[p.nbr][p.v]
                adj[p.v].clear()
                alive[p.v] = False
            else:
                if len(adj[p.v]) != 2:
                    raise AssertionError(f"degree-2 pivot mismatch at {p.v}")
                wl = adj[p.v].get(p.left)
                wr = adj[p.v].get(p.right)
                if wl is None or wr is None:
                    raise AssertionError(f"degree-2 neighbors mismatch at {p.v}")
                if not (math.isclose(wl, p.w_left, rel_tol=1e-12)
                        and math.isclose(wr, p.w_right, rel_tol=1e-12)):
                    raise AssertionError(f"degree-2 weights mismatch at {p.v}")
                del adj[p.left][p.v]
                del adj[p.right][p.v]
                adj[p.v].clear()
                alive[p.v] = False
                wnew = wl * wr / (wl + wr)
                adj[p.left][p.right] = adj[p.left].get(p.right, 0.0) + wnew
                adj[p.right][p.left] = adj[p.right].get(p.left, 0.0) + wnew
    kept = [v for v in range(g.n) if alive[v]]
    edges = {}
    for u in kept:
        for v, w in adj[u].items():
            if u < v:
                edges[(u, v)] = w
    return edges, kept
