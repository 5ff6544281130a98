"""Fixture graph families: grid, cycle, random, geometric, and SDD matrices."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .graphs import WeightedMultigraph
from .rng import make_rng


def path_graph(n: int, w: float = 1.0) -> WeightedMultigraph:
    return WeightedMultigraph.from_edges(n, [(i, i + 1, w) for i in range(n - 1)])


def cycle_graph(n: int, w: float = 1.0) -> WeightedMultigraph:
    if n < 3:
        raise ValueError("cycle needs at least 3 vertices")
    edges = [(i, (i + 1) % n, w) for i in range(n)]
    return WeightedMultigraph.from_edges(n, edges)


def star_graph(leaves: int, w: float = 1.0) -> WeightedMultigraph:
    return WeightedMultigraph.from_edges(leaves + 1, [(0, i + 1, w) for i in range(leaves)])


def grid_graph(nx: int, ny: int, w: float = 1.0) -> WeightedMultigraph:
    """nx-by-ny lattice with 4-neighborhood, vertex id = y * nx + x."""
    edges = []
    for y in range(ny):
        for x in range(nx):
            u = y * nx + x
            if x + 1 < nx:
                edges.append((u, u + 1, w))
            if y + 1 < ny:
                edges.append((u, u + nx, w))
    return WeightedMultigraph.from_edges(nx * ny, edges)


def two_scale_grid(nx: int, ny: int, heavy: float = 2500.0,
                   band: int = 4) -> WeightedMultigraph:
    """Grid whose horizontal bands alternate between unit and heavy weights.

    Produces well-separated weight classes for multi-class decomposition
    fixtures.
    """
    edges = []
    for y in range(ny):
        w = heavy if (y // band) % 2 else 1.0
        for x in range(nx):
            u = y * nx + x
            if x + 1 < nx:
                edges.append((u, u + 1, w))
            if y + 1 < ny:
                edges.append((u, u + nx, 1.0 if (y + 1) % band == 0 else w))
    return WeightedMultigraph.from_edges(nx * ny, edges)


def erdos_renyi(n: int, p: float, seed: int, weights: str = "unit",
                wmax: float = 100.0) -> WeightedMultigraph:
    """G(n, p); weights are "unit" or "loguniform" over [1, wmax)."""
    rng = make_rng(seed, "gnp")
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(len(iu)) < p
    eu, ev = iu[mask], ju[mask]
    if weights == "unit":
        ew = np.ones(len(eu))
    elif weights == "loguniform":
        ew = np.exp(rng.uniform(0.0, np.log(wmax), len(eu)))
    else:
        raise ValueError(f"unknown weight mode {weights!r}")
    return WeightedMultigraph(n, eu, ev, ew, np.arange(len(eu)))


def random_connected(n: int, p: float, seed: int, weights: str = "unit",
                     wmax: float = 100.0) -> WeightedMultigraph:
    """G(n, p) plus a random spanning cycle-free backbone to force connectivity."""
    g = erdos_renyi(n, p, seed, weights=weights, wmax=wmax)
    rng = make_rng(seed, "backbone")
    perm = rng.permutation(n)
    have = {(min(int(u), int(v)), max(int(u), int(v)))
            for u, v in zip(g.eu, g.ev)}
    extra = []
    for a, b in zip(perm[:-1], perm[1:]):
        key = (min(int(a), int(b)), max(int(a), int(b)))
        if key not in have:
            w = 1.0 if weights == "unit" else float(np.exp(rng.uniform(0, np.log(wmax))))
            extra.append((int(a), int(b), w))
            have.add(key)
    if not extra:
        return g
    eu = np.concatenate([g.eu, [e[0] for e in extra]])
    ev = np.concatenate([g.ev, [e[1] for e in extra]])
    ew = np.concatenate([g.ew, [e[2] for e in extra]])
    return WeightedMultigraph(n, eu, ev, ew, np.arange(len(eu)))


def random_geometric(n: int, radius: float, seed: int) -> WeightedMultigraph:
    """Unit-square geometric graph; edge weight = Euclidean distance scaled to >= 1."""
    rng = make_rng(seed, "rgg")
    pts = rng.random((n, 2))
    edges = []
    for u in range(n):
        d = np.hypot(pts[u + 1:, 0] - pts[u, 0], pts[u + 1:, 1] - pts[u, 1])
        for off in np.nonzero(d <= radius)[0]:
            edges.append((u, u + 1 + int(off), max(float(d[off]), 1e-9)))
    if not edges:
        return WeightedMultigraph.from_edges(n, [])
    wmin = min(e[2] for e in edges)
    return WeightedMultigraph.from_edges(n, [(u, v, w / wmin) for u, v, w in edges])


def random_multigraph(n: int, m: int, seed: int, wmax: float = 10.0) -> WeightedMultigraph:
    """m random edges with possible parallels (no self-loops)."""
    rng = make_rng(seed, "multi")
    eu = rng.integers(0, n, m)
    ev = rng.integers(0, n - 1, m)
    ev = np.where(ev >= eu, ev + 1, ev)
    ew = rng.uniform(1.0, wmax, m)
    return WeightedMultigraph(n, eu, ev, ew, np.arange(m))


def random_sdd(n: int, density: float, seed: int, excess: float = 0.5,
               positive_frac: float = 0.3) -> sp.csr_matrix:
    """Random symmetric diagonally dominant matrix with mixed-sign off-diagonals."""
    rng = make_rng(seed, "sdd")
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(len(iu)) < density
    iu, ju = iu[mask], ju[mask]
    vals = rng.uniform(0.5, 2.0, len(iu))
    sign = np.where(rng.random(len(iu)) < positive_frac, 1.0, -1.0)
    off = vals * sign
    a = sp.coo_matrix((np.concatenate([off, off]),
                       (np.concatenate([iu, ju]), np.concatenate([ju, iu]))),
                      shape=(n, n)).tocsr()
    rowsum = np.abs(a).sum(axis=1).A1
    bump = rng.uniform(0.0, excess, n)
    diag = rowsum + bump
    return (a + sp.diags(diag)).tocsr()
