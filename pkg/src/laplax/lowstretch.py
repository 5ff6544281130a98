"""Low-stretch spanning trees and ultra-sparse low-stretch subgraphs.

The tree construction buckets edges into geometric weight classes, then
repeatedly partitions the graph spanned by the active classes into
low-radius components, adds a BFS tree of each component, and contracts.
The sparse variant keeps only a window of the newest classes active
(older ones fall into a generic bucket) and carries every edge that
survives its window straight into the output, where its stretch is 1.

The subgraph construction additionally removes a few sparse runs of weight
classes ("well-spacing"), which lets the remaining class ranges run as
independent segments: each segment rebuilds its starting vertex set by
contracting the minimum-spanning-forest edges of all lighter classes, so
no segment waits for another.  Removed edges rejoin the output at the end.

All randomness is derived from the caller's seed per iteration / segment,
so any stage reruns identically in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .decompose import (DEFAULT_CUT_CONSTANT, DEFAULT_RETRY_LIMIT,
                        DEFAULT_SAMPLING_CONSTANT, partition)
from .graphs import (
    EdgeClassedGraph,
    WeightedMultigraph,
    class_of_weight,
    contract,
    normalize_weights,
    per_edge_stretch,
    weight_classes,
)
from .rng import split_seed


def _log2(n: int) -> float:
    return math.log2(max(n, 2))


def _log2_ceil(n: int) -> int:
    return max(1, math.ceil(_log2(n)))


@dataclass
class AkpwParams:
    """Parameters of the tree/subgraph constructions.

    ``z`` is the weight-class base and the partition radius is z/4; ``tau``
    is the class window of the plain tree construction and the well-spacing
    window; ``lam`` is the class window of the sparse construction;
    ``beta``/``theta`` drive well-spacing.  Theory mode derives everything
    from n; at desk scale those constants explode, so practical mode fixes
    small values and keeps the same structure.
    """

    z: float = 32.0
    tau: int = 3
    lam: int = 2
    y: float = 4.0
    beta: float | None = None
    theta: float | None = None
    c1: float = DEFAULT_CUT_CONSTANT
    c_sigma: float = DEFAULT_SAMPLING_CONSTANT
    retry_limit: int = DEFAULT_RETRY_LIMIT
    theory: bool = False

    def __post_init__(self):
        if self.y <= 1:
            raise ValueError("class decay factor y must exceed 1")
        if self.z <= 8:
            raise ValueError("class base z must exceed 8")
        if self.tau < 1:
            raise ValueError("window tau must be >= 1")
        if self.lam < 1:
            raise ValueError("window lam must be >= 1")
        if self.theta is not None and not (0 < self.theta <= 1):
            raise ValueError("removal fraction theta must lie in (0, 1]")

    @classmethod
    def tree_theory(cls, n: int, c1: float = DEFAULT_CUT_CONSTANT) -> "AkpwParams":
        """y = 2^sqrt(6 log n loglog n), tau = ceil(3 log n / log y), z = 4 c1 y tau log^3 n."""
        ln = _log2(n)
        y = 2.0 ** math.sqrt(6.0 * ln * max(_log2(max(int(ln), 2)), 1.0))
        tau = max(1, math.ceil(3.0 * ln / math.log2(y)))
        z = 4.0 * c1 * y * tau * ln ** 3
        return cls(z=z, tau=tau, y=y, c1=c1, theory=True)

    @classmethod
    def subgraph_theory(cls, n: int, lam: int, beta: float,
                        c1: float = DEFAULT_CUT_CONSTANT) -> "AkpwParams":
        """y = beta / (c2 log^3 n), z = 4 c1 y (lam+1) log^3 n, theta = (log^3 n / beta)^lam."""
        ln = _log2(n)
        c2 = 2.0 * (4.0 * c1 * (lam + 1)) ** (0.5 * (lam - 1))
        if beta < c2 * ln ** 3:
            raise ValueError(f"theory mode needs beta >= c2 log^3 n = {c2 * ln ** 3:.3g}")
        y = beta / (c2 * ln ** 3)
        z = 4.0 * c1 * y * (lam + 1) * ln ** 3
        tau = max(1, math.ceil(3.0 * ln / math.log2(max(y, 1.0 + 1e-9))))
        theta = min(1.0, (ln ** 3 / beta) ** lam)
        return cls(z=z, tau=tau, lam=lam, y=y, beta=beta, theta=theta, c1=c1,
                   theory=True)

    @classmethod
    def practical(cls, n: int, lam: int = 2, beta: float | None = None,
                  z: float = 32.0, tau: int = 3,
                  c1: float = DEFAULT_CUT_CONSTANT) -> "AkpwParams":
        """Desk-scale defaults: z=32, tau=3, lam=2, beta defaults to 4 log^3 n."""
        log3 = float(_log2_ceil(n)) ** 3
        if beta is None:
            beta = 4.0 * log3
        if beta <= log3:
            raise ValueError(f"practical mode needs beta > log^3 n = {log3:.3g}")
        theta = min(1.0, (log3 / beta) ** lam)
        return cls(z=z, tau=tau, lam=lam, beta=beta, theta=theta, c1=c1, theory=False)


@dataclass
class StretchSubgraph:
    """Spanning subgraph as (tree, extra, removed) edge ids plus provenance.

    Provenance per input eid: ("tree", j) added to a BFS tree at iteration
    j; ("contracted", j) became intra-component at iteration j and is
    charged through the tree; ("carried", j) survived its class window and
    joined the output; ("removed",) set aside by well-spacing and restored.
    """

    n: int
    tree_eids: np.ndarray
    extra_eids: np.ndarray
    removed_eids: np.ndarray
    provenance: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    def subgraph_eids(self) -> np.ndarray:
        return np.sort(np.concatenate([self.tree_eids, self.extra_eids,
                                       self.removed_eids]).astype(np.int64))

    def edge_count(self) -> int:
        return len(self.tree_eids) + len(self.extra_eids) + len(self.removed_eids)


# -- internals -----------------------------------------------------------------


def _bfs_tree_eids(g: WeightedMultigraph, root: int, member_mask: np.ndarray,
                   allowed_eidx: np.ndarray) -> list[int]:
    """Edge ids of a BFS tree of the component, rooted at its center.

    Traversal is restricted to the component's vertices and the active edge
    set; neighbors are visited in eid order so the tree is reproducible.
    """
    seen = {root}
    frontier = [root]
    tree: list[int] = []
    while frontier:
        nxt: list[int] = []
        for u in frontier:
            nbrs, eidx = g.incident(u)
            for v, ei in zip(nbrs, eidx):
                v = int(v)
                if member_mask[v] and allowed_eidx[ei] and v not in seen:
                    seen.add(v)
                    tree.append(int(g.eids[ei]))
                    nxt.append(v)
        frontier = sorted(nxt)
    return tree


def boruvka_msf(g: WeightedMultigraph) -> np.ndarray:
    """Minimum spanning forest edge ids, contract-style rounds.

    Each round every component picks its minimum outgoing (weight, eid)
    edge; ties resolve by eid, making the forest unique and deterministic.
    """
    parent = list(range(g.n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    chosen: set[int] = set()
    while True:
        best: dict[int, tuple[float, int, int]] = {}
        for i in range(g.m):
            ru, rv = find(int(g.eu[i])), find(int(g.ev[i]))
            if ru == rv:
                continue
            key = (float(g.ew[i]), int(g.eids[i]), i)
            for r in (ru, rv):
                if r not in best or key < best[r]:
                    best[r] = key
        if not best:
            break
        merged = False
        for _w, eid, i in sorted(best.values()):
            ru, rv = find(int(g.eu[i])), find(int(g.ev[i]))
            if ru != rv:
                parent[max(ru, rv)] = min(ru, rv)
                chosen.add(eid)
                merged = True
        if not merged:
            break
    return np.array(sorted(chosen), dtype=np.int64)


@dataclass
class _EngineResult:
    tree: list
    extras: set
    provenance: dict
    class_log: dict
    rounds: int = 0
    retries: int = 0
    iterations: int = 0
    generic_used: bool = False


def _akpw_engine(g: WeightedMultigraph, class_of: dict, params: AkpwParams,
                 seed: int, *, window: int | None, collect_extras: bool,
                 first_j: int = 1, trace: list | None = None) -> _EngineResult:
    """Shared partition-contract loop of the tree and sparse constructions.

    ``window``: pass the newest ``window`` classes individually and bundle
    everything older into the generic bucket (None passes all active
    classes individually).  ``collect_extras``: snapshot each class's
    survivors the moment it ages out of the window.  ``trace`` (a list, when
    given) receives one record per iteration with the component structure
    expanded back to the vertices of ``g``, for audits.
    """
    res = _EngineResult(tree=[], extras=set(), provenance={}, class_log={})
    alive = g
    if alive.m == 0:
        return res
    rho = params.z / 4.0
    max_class = max(class_of[int(e)] for e in alive.eids)
    j = first_j
    j_cap = max_class + 64 * _log2_ceil(g.n) + 64
    expanded = [np.array([v]) for v in range(g.n)] if trace is not None else None
    while alive.m > 0:
        if j > j_cap:
            raise RuntimeError("class contraction failed to make progress")
        by_class: dict[int, list[int]] = {}
        for e in alive.eids:
            by_class.setdefault(class_of[int(e)], []).append(int(e))
        res.class_log[j] = {i: len(v) for i, v in sorted(by_class.items())}
        if collect_extras:
            aged = j - params.lam
            if aged in by_class:
                res.extras.update(by_class[aged])
                for e in by_class[aged]:
                    res.provenance.setdefault(e, ("carried", j))
        lo = 1 if window is None else j - window + 1
        individual = {i: np.array(sorted(v), dtype=np.int64)
                      for i, v in sorted(by_class.items()) if lo <= i <= j}
        generic = sorted(e for i, v in by_class.items() if i < lo for e in v)
        active_eids = sorted(e for i, v in by_class.items() if i <= j for e in v)
        if not active_eids:
            j += 1
            continue
        if generic:
            res.generic_used = True
        sub = alive.edge_subgraph(active_eids)
        ecg = EdgeClassedGraph(
            base=sub, z=params.z, classes=individual,
            generic=np.array(generic, dtype=np.int64) if generic else None)
        dec = partition(ecg, rho=rho, seed=split_seed(seed, "iter", j),
                        c1=params.c1, c_sigma=params.c_sigma,
                        retry_limit=params.retry_limit)
        res.rounds += dec.rounds
        res.retries += dec.retries
        allowed = np.zeros(alive.m, dtype=bool)
        allowed[[alive.edge_index(e) for e in active_eids]] = True
        members_by_comp = dec.component_members()
        member_mask = np.zeros(alive.n, dtype=bool)
        for c, members in enumerate(members_by_comp):
            if len(members) == 1:
                continue
            member_mask[members] = True
            tree_eids = _bfs_tree_eids(alive, int(dec.centers[c]), member_mask, allowed)
            if len(tree_eids) != len(members) - 1:
                raise AssertionError("component not spanned by its BFS tree")
            res.tree.extend(tree_eids)
            for e in tree_eids:
                res.provenance[e] = ("tree", j)
            member_mask[members] = False
        if trace is not None:
            comp_expanded = [np.sort(np.concatenate([expanded[int(v)] for v in members]))
                             for members in members_by_comp]
            trace.append({"j": j,
                          "assignment": dec.assignment.copy(),
                          "centers": dec.centers.copy(),
                          "components_expanded": comp_expanded,
                          "centers_expanded": [expanded[int(c)] for c in dec.centers]})
            expanded = comp_expanded
        before = set(int(e) for e in alive.eids)
        alive, survival = contract(alive, dec.assignment)
        for e in before - set(survival):
            res.provenance.setdefault(e, ("contracted", j))
        res.iterations += 1
        j += 1
    return res


def _finalize(g: WeightedMultigraph, res: _EngineResult, removed: np.ndarray,
              audit: bool, z: float) -> StretchSubgraph:
    tree = np.array(sorted(res.tree), dtype=np.int64)
    extras = np.array(sorted(res.extras - set(res.tree)), dtype=np.int64)
    for e in removed:
        res.provenance[int(e)] = ("removed",)
    sub = StretchSubgraph(n=g.n, tree_eids=tree, extra_eids=extras,
                          removed_eids=np.asarray(removed, dtype=np.int64),
                          provenance=res.provenance)
    sub.stats = {
        "tree_edges": len(tree),
        "extra_edges": len(extras),
        "removed_edges": len(sub.removed_eids),
        "total_edges": sub.edge_count(),
        "iterations": res.iterations,
        "partition_rounds": res.rounds,
        "partition_retries": res.retries,
        "generic_bucket_used": res.generic_used,
        "class_sizes": res.class_log,
    }
    if audit:
        stretch = per_edge_stretch(g, sub.subgraph_eids())
        sub.stats["per_edge_stretch"] = stretch
        sub.stats["total_stretch"] = float(stretch.sum())
        gnorm, _ = normalize_weights(g)
        per_class: dict[int, float] = {}
        for i in range(g.m):
            c = class_of_weight(float(gnorm.ew[i]), z)
            per_class[c] = per_class.get(c, 0.0) + float(stretch[i])
        sub.stats["per_class_stretch"] = per_class
    return sub


def _normalized_classes(g: WeightedMultigraph, z: float):
    gnorm, scale = normalize_weights(g)
    class_of = {int(gnorm.eids[i]): class_of_weight(float(gnorm.ew[i]), z)
                for i in range(gnorm.m)}
    return gnorm, scale, class_of


# -- public operations -----------------------------------------------------------


def akpw(g: WeightedMultigraph, params: AkpwParams | None = None, seed: int = 0,
         audit: bool = True) -> StretchSubgraph:
    """Low-stretch spanning tree (spanning forest on disconnected input).

    In practical mode, classes older than ``tau`` iterations join a generic
    bucket (mirroring the sparse construction); the audit output flags this.
    Theory mode keeps every active class individual.
    """
    if params is None:
        params = AkpwParams.practical(g.n)
    gnorm, _scale, class_of = _normalized_classes(g, params.z)
    window = None if params.theory else params.tau
    res = _akpw_engine(gnorm, class_of, params, seed,
                       window=window, collect_extras=False)
    return _finalize(g, res, np.zeros(0, dtype=np.int64), audit, params.z)


def sparse_akpw(g: WeightedMultigraph, params: AkpwParams | None = None,
                seed: int = 0, audit: bool = True) -> StretchSubgraph:
    """Tree plus every edge that survives lam iterations past its activation."""
    if params is None:
        params = AkpwParams.practical(g.n)
    gnorm, _scale, class_of = _normalized_classes(g, params.z)
    res = _akpw_engine(gnorm, class_of, params, seed,
                       window=params.lam, collect_extras=True)
    return _finalize(g, res, np.zeros(0, dtype=np.int64), audit, params.z)


def well_space(ecg: EdgeClassedGraph, tau: int, theta: float
               ) -> tuple[WeightedMultigraph, np.ndarray, list[int]]:
    """Remove sparse runs of weight classes to break the class dependency chain.

    Classes group into consecutive blocks of ceil(tau/theta); inside each
    block the tau-class window with the smallest edge total is removed when
    that total is at most a theta fraction of the block's edges.  The next
    nonempty class above each removed window becomes a segment start.
    Returns (graph without removed edges, removed eids, segment starts).
    """
    if tau < 1:
        raise ValueError("tau must be >= 1")
    if not (0 < theta <= 1):
        raise ValueError("theta must lie in (0, 1]")
    sizes = {i: len(v) for i, v in ecg.classes.items()}
    if not sizes:
        return ecg.base, np.zeros(0, dtype=np.int64), []
    max_class = max(sizes)
    block = max(tau, math.ceil(tau / theta))
    removed: list[int] = []
    specials: list[int] = []
    for lo in range(1, max_class + 1, block):
        hi = min(lo + block - 1, max_class)
        if hi - lo + 1 < tau:
            continue
        total = sum(sizes.get(i, 0) for i in range(lo, hi + 1))
        best_a, best_sum = None, None
        for a in range(lo, hi - tau + 2):
            s = sum(sizes.get(i, 0) for i in range(a, a + tau))
            if best_sum is None or s < best_sum:
                best_a, best_sum = a, s
        if best_a is None or best_sum > theta * total:
            continue
        for i in range(best_a, best_a + tau):
            removed.extend(int(e) for e in ecg.classes.get(i, ()))
        nxt = next((i for i in sorted(sizes)
                    if i > best_a + tau - 1 and sizes[i] > 0), None)
        if nxt is not None and nxt not in specials:
            specials.append(nxt)
    removed_arr = np.array(sorted(removed), dtype=np.int64)
    keep = np.setdiff1d(ecg.base.eids, removed_arr)
    return ecg.base.edge_subgraph(keep), removed_arr, sorted(specials)


@dataclass
class SegmentResult:
    start_class: int
    end_class: float
    tree: list
    extras: set
    provenance: dict
    class_log: dict
    rounds: int
    retries: int
    generic_used: bool


def run_segment(gprime: WeightedMultigraph, class_of: dict, msf_eids: np.ndarray,
                params: AkpwParams, start: int, end: float, seed: int,
                first_segment: bool) -> SegmentResult:
    """Run the sparse construction on one well-spaced class segment.

    Non-initial segments rebuild their starting vertex set by contracting
    the minimum-spanning-forest edges of classes <= start - tau, then keep
    only this segment's classes; the run is a pure function of
    (graph, classes, start, seed) and reruns identically in isolation.  The
    first segment keeps the caller's seed unchanged, so a construction with
    no well-spacing removal coincides with the plain sparse run.
    """
    seg_seed = seed if first_segment else split_seed(seed, "segment", start)
    if first_segment:
        quotient = gprime
    else:
        light = [int(e) for e in msf_eids if class_of[int(e)] <= start - params.tau]
        parent = np.arange(gprime.n)

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = int(parent[x])
            return int(x)

        for e in light:
            i = gprime.edge_index(e)
            ru, rv = find(int(gprime.eu[i])), find(int(gprime.ev[i]))
            if ru != rv:
                parent[max(ru, rv)] = min(ru, rv)
        assignment = np.array([find(v) for v in range(gprime.n)])
        quotient, _ = contract(gprime, assignment)
    seg_eids = sorted(int(e) for e in quotient.eids
                      if start <= class_of[int(e)] < end)
    seg_graph = quotient.edge_subgraph(seg_eids)
    res = _akpw_engine(seg_graph, class_of, params, seg_seed,
                       window=params.lam, collect_extras=True, first_j=start)
    return SegmentResult(start_class=start, end_class=end, tree=res.tree,
                         extras=res.extras, provenance=res.provenance,
                         class_log=res.class_log, rounds=res.rounds,
                         retries=res.retries, generic_used=res.generic_used)


def ls_subgraph(g: WeightedMultigraph, params: AkpwParams | None = None,
                seed: int = 0, audit: bool = True, threads: int = 1
                ) -> StretchSubgraph:
    """Low-stretch ultra-sparse subgraph: well-space, run segments, restore.

    Output edges = segment trees + carried class survivors + removed edges;
    on connected input with the removal not disconnecting, the edge count
    is exactly (n - 1) + |extra| + |removed|.
    """
    if params is None:
        params = AkpwParams.practical(g.n)
    if params.beta is None or params.theta is None:
        raise ValueError("subgraph construction needs beta/theta "
                         "(use AkpwParams.practical or subgraph_theory)")
    gnorm, _scale, class_of = _normalized_classes(g, params.z)
    ecg = weight_classes(gnorm, params.z)
    gprime, removed, specials = well_space(ecg, params.tau, params.theta)
    merged = _EngineResult(tree=[], extras=set(), provenance={}, class_log={})
    segments: list[tuple[int, float, bool]] = []
    if gprime.m:
        gp_eids = set(int(e) for e in gprime.eids)
        nonempty = sorted(i for i, v in ecg.classes.items()
                          if any(int(e) in gp_eids for e in v))
        first = nonempty[0] if nonempty else 1
        starts = [first] + [s for s in specials if s > first]
        bounds = starts + [math.inf]
        segments = [(starts[k], bounds[k + 1], k == 0) for k in range(len(starts))]
    msf = boruvka_msf(gprime) if len(segments) > 1 else np.zeros(0, dtype=np.int64)

    def run(args):
        start, end, is_first = args
        return run_segment(gprime, class_of, msf, params, start, end, seed, is_first)

    if threads > 1 and len(segments) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, segments))
    else:
        results = [run(s) for s in segments]
    seg_meta = []
    for r in results:
        merged.tree.extend(r.tree)
        merged.extras.update(r.extras)
        merged.provenance.update(r.provenance)
        merged.rounds += r.rounds
        merged.retries += r.retries
        merged.generic_used |= r.generic_used
        seg_meta.append({"start": r.start_class,
                         "end": None if math.isinf(r.end_class) else r.end_class,
                         "class_sizes": r.class_log})
    out = _finalize(g, merged, removed, audit, params.z)
    out.stats["segments"] = seg_meta
    out.stats["specials"] = specials
    out.stats["components_after_removal"] = gprime.num_components()
    return out
