"""Acceptance suite: every criterion at its stated tolerance.

Run with ``pytest -s tests/test_acceptance.py`` to see one PASS line per
criterion.  Each test prints its verdict and asserts it, so the module
doubles as the go/no-go gate for the whole package.
"""

import json
import math
import time

import numpy as np
import pytest

from laplax import (
    AkpwParams,
    SolveOptions,
    SparsifyParams,
    akpw,
    eliminate_solve,
    greedy_elimination,
    incremental_sparsify,
    laplacian,
    ls_subgraph,
    partition,
    sdd_solve,
    total_stretch,
    weight_classes,
)
from laplax.decompose import (
    ball_separation_rate,
    class_cut_bounds,
    component_strong_radii,
    count_class_cuts,
)
from laplax.generators import (
    cycle_graph,
    grid_graph,
    random_connected,
    random_sdd,
    two_scale_grid,
)
from laplax.graphs import WeightedMultigraph, normalize_weights
from laplax.oracles import dense_pinv_solve, oracle_total_stretch, pencil_bounds
from laplax.rng import make_rng, split_seed
from laplax.solver import UniformSchedule, build_chain, level_solve


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    assert ok, f"{criterion}: {detail}"


def a_norm_rel_err(lap, x, ref):
    d = x - ref
    d = d - d.mean()
    num = math.sqrt(max(float(d @ (lap @ d)), 0.0))
    den = math.sqrt(max(float(ref @ (lap @ ref)), 1e-300))
    return num / den


def test_criterion_1_decomposition_soundness():
    """100 seeds x 4 fixtures: total partition, P1, P2, clamped cut audit."""
    fixtures = [
        ("grid30", grid_graph(30, 30), 20, 4.0),
        ("gnp1000", random_connected(1000, 0.01, seed=11), 22, 4.0),
        ("cycle1000", cycle_graph(1000), 24, 4.0),
        ("two-scale", two_scale_grid(24, 24), 20, 10.0),
    ]
    t0 = time.perf_counter()
    runs = 0
    for name, g, rho, z in fixtures:
        gn, _ = normalize_weights(g)
        ecg = weight_classes(gn, z)
        bounds = class_cut_bounds(ecg, rho)
        sizes = {i: len(v) for i, v in ecg.classes.items()}
        for seed in range(100):
            dec = partition(ecg, rho=rho, seed=split_seed(101, name, seed))
            dec.validate_basic()                       # total partition + P1
            assert np.all(dec.assignment >= 0)
            radii = component_strong_radii(g, dec)
            assert radii.max() <= rho, f"{name} seed {seed}: strong radius"
            cuts = count_class_cuts(ecg, dec.assignment)
            for i, cut in cuts.items():
                assert cut <= bounds[i] or bounds[i] >= sizes[i]
            runs += 1
    elapsed = time.perf_counter() - t0
    report("criterion 1 (decomposition soundness)",
           runs == 400 and elapsed < 60.0,
           f"400 partitions audited in {elapsed:.1f}s (< 60s)")


def test_criterion_2_cut_rate_scaling():
    """Ball-boundary separation rate on C_2000 fits c/R with R^2 >= 0.95."""
    g = cycle_graph(2000)
    centers = np.arange(0, 2000, 50)
    r_values = [2, 4, 8, 16]
    means = []
    for r_jit in r_values:
        vals = [ball_separation_rate(
                    g, centers, radius=25, r_jit=r_jit,
                    seed=split_seed(202, r_jit, s))
                for s in range(200)]
        means.append(float(np.mean(vals)))
    x = np.array([1.0 / r for r in r_values])
    y = np.array(means)
    c_hat = float(x @ y / (x @ x))
    ss_res = float(((y - c_hat * x) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot
    report("criterion 2 (cut-rate ~ c/R)", r2 >= 0.95,
           f"rates {[f'{m:.4f}' for m in means]} vs 1/R, fit c={c_hat:.3f}, "
           f"R^2={r2:.4f} (>= 0.95)")


def test_criterion_3_spanning_tree_exactness():
    """Trees return themselves; 20 random graphs: spanning+acyclic+oracle."""
    for seed in range(3):
        tree = _random_tree(150, seed)
        sub = akpw(tree, AkpwParams.practical(tree.n), seed=seed)
        assert set(map(int, sub.tree_eids)) == set(map(int, tree.eids))
        assert sub.stats["total_stretch"] == pytest.approx(tree.m)
    worst = 0.0
    for seed in range(20):
        n = 80 + 21 * seed  # up to 479 <= 500
        g = random_connected(n, 4.0 / n, seed=seed,
                             weights="loguniform" if seed % 2 else "unit",
                             wmax=1e4)
        sub = akpw(g, AkpwParams.practical(g.n), seed=seed)
        tree_eids = sub.tree_eids
        h = g.edge_subgraph(tree_eids)
        assert h.num_components() == g.num_components()
        assert len(tree_eids) == g.n - g.num_components()   # spanning + acyclic
        oracle = oracle_total_stretch(g, tree_eids)
        rel = abs(sub.stats["total_stretch"] - oracle) / oracle
        worst = max(worst, rel)
    report("criterion 3 (spanning-tree exactness)", worst <= 1e-9,
           f"tree inputs exact; 20 graphs spanning/acyclic, "
           f"stretch vs oracle rel err {worst:.2e} (<= 1e-9)")


def test_criterion_4_ls_subgraph_structure():
    """Edge-count identity, the two-parts inequality, segment isolation."""
    from laplax.lowstretch import boruvka_msf, run_segment, well_space
    from laplax.graphs import class_of_weight

    worst_gap = -np.inf
    for seed in range(20):
        g = _two_scale_graph(seed)
        params = AkpwParams.practical(g.n, lam=2)
        sub = ls_subgraph(g, params, seed=seed)
        assert sub.stats["components_after_removal"] == 1
        assert sub.edge_count() == (g.n - 1) + len(sub.extra_eids) + \
            len(sub.removed_eids)
        keep = np.setdiff1d(g.eids, sub.removed_eids)
        inner = total_stretch(g.edge_subgraph(keep),
                              np.concatenate([sub.tree_eids, sub.extra_eids]))
        bound = len(sub.removed_eids) + inner
        gap = bound - sub.stats["total_stretch"]
        worst_gap = max(worst_gap, -gap)
        assert sub.stats["total_stretch"] <= bound + 1e-9
    # segment isolation on one multi-segment fixture
    g = _two_scale_graph(2)
    params = AkpwParams.practical(g.n, lam=2)
    sub = ls_subgraph(g, params, seed=5)
    segs = sub.stats["segments"]
    assert len(segs) >= 2
    gn, _ = normalize_weights(g)
    class_of = {int(gn.eids[i]): class_of_weight(float(gn.ew[i]), params.z)
                for i in range(gn.m)}
    gprime, _removed, _spec = well_space(weight_classes(gn, params.z),
                                         params.tau, params.theta)
    rerun = run_segment(gprime, class_of, boruvka_msf(gprime), params,
                        segs[-1]["start"], math.inf, 5, first_segment=False)
    expected_tree = {e for e, p in sub.provenance.items()
                     if p[0] == "tree" and p[1] >= segs[-1]["start"]}
    assert set(rerun.tree) == expected_tree
    report("criterion 4 (subgraph structure)", True,
           f"identity + two-parts inequality on 20 seeds "
           f"(max violation {max(worst_gap, 0):.1e}); segment isolation ok")


def test_criterion_5_sparsifier_sandwich():
    """Checked mode: 1 <= lam_min <= lam_max <= kappa, >= 90% first attempt."""
    first = 0
    slow = 0.0
    for seed in range(50):
        g = random_connected(150, 0.08, seed=seed)
        ghat = ls_subgraph(g, AkpwParams.practical(g.n, lam=2), seed=seed)
        t0 = time.perf_counter()
        h, audit = incremental_sparsify(
            g, ghat, SparsifyParams(kappa=16.0, seed=seed, c_is=2.5))
        slow = max(slow, time.perf_counter() - t0)
        bounds = pencil_bounds(laplacian(h), laplacian(g))
        assert bounds.lambda_min >= 1 - 1e-9
        assert bounds.lambda_max <= 16.0 * (1 + 1e-9)
        if audit["attempts"] == 1 and not audit["rescaled"]:
            first += 1
    report("criterion 5 (sparsifier sandwich)",
           first >= 45 and slow < 2.0,
           f"sandwich exact on 50/50; {first}/50 without the rescale "
           f"(>= 45); slowest run {slow:.2f}s (< 2s)")


def test_criterion_6_elimination_exactness():
    """Exact Schur solve, vertex bound, round bound."""
    worst = 0.0
    for seed in range(50):
        g = _sparse_graph(130, extra=8, seed=seed)
        lap = laplacian(g)
        b = make_rng(606, "b", seed).standard_normal(g.n)
        b -= b.mean()
        reduced, record = greedy_elimination(g, seed=seed)
        assert reduced.n <= max(1, 2 * 8 - 2)
        red_b, _ = record.forward_rhs(b)
        x_red = dense_pinv_solve(laplacian(reduced), red_b)
        x = eliminate_solve(record, x_red, b)
        worst = max(worst, a_norm_rel_err(lap, x, dense_pinv_solve(lap, b)))
    round_bound = 8 * math.ceil(math.log2(200))
    max_rounds = 0
    for seed in range(100):
        g = _sparse_graph(200, extra=10, seed=1000 + seed)
        reduced, record = greedy_elimination(g, seed=seed)
        assert reduced.n <= max(1, 2 * 10 - 2)
        max_rounds = max(max_rounds, record.rounds())
    report("criterion 6 (elimination exactness)",
           worst <= 1e-10 and max_rounds <= round_bound,
           f"A-norm rel err {worst:.1e} (<= 1e-10); vertex bound held; "
           f"rounds max {max_rounds} (<= {round_bound}) over 100 trials")


def test_criterion_7_end_to_end_solver():
    """Theorem-contract accuracy on three fixtures, log(1/eps) scaling."""
    fixtures = []
    g1 = grid_graph(50, 50)
    fixtures.append(("grid50", laplacian(g1).tocsr(), None))
    g2 = random_connected(2000, 8.0 / 2000, seed=7)
    fixtures.append(("gnp2000", laplacian(g2).tocsr(), None))
    a3 = random_sdd(300, density=0.03, seed=7)
    fixtures.append(("gremban-sdd", a3, "sdd"))
    lines = []
    ok = True
    for name, mat, kind in fixtures:
        n = mat.shape[0]
        rng = make_rng(707, name)
        b = rng.standard_normal(n)
        if kind != "sdd":
            b -= b.mean()
            ref = dense_pinv_solve(mat, b)
        else:
            ref = np.linalg.lstsq(mat.toarray(), b, rcond=None)[0]
        iters = {}
        for eps in (1e-4, 1e-8):
            t0 = time.perf_counter()
            x, rep = sdd_solve(mat, b, SolveOptions(epsilon=eps, seed=5))
            dt = time.perf_counter() - t0
            err = a_norm_rel_err(mat, x, ref)
            iters[eps] = rep["outer_iters"]
            ok &= err <= eps and dt < 30.0
            lines.append(f"{name} eps={eps:.0e}: err={err:.1e} "
                         f"iters={rep['outer_iters']} {dt:.1f}s")
        ok &= iters[1e-8] <= 2.5 * iters[1e-4]
        lines.append(f"{name} iter ratio {iters[1e-8]}/{iters[1e-4]} (<= 2.5x)")
    report("criterion 7 (end-to-end solver)", ok, "; ".join(lines))


def test_criterion_8_determinism():
    """Byte-identical outputs for fixed seeds across 1, 2, 8 threads."""
    g = _two_scale_graph(3)
    gn, _ = normalize_weights(g)
    ecg = weight_classes(gn, 10.0)

    def partition_blob(_threads):
        dec = partition(ecg, rho=16, seed=31)
        return dec.assignment.tobytes() + dec.centers.tobytes()

    def akpw_blob(_threads):
        return akpw(g, AkpwParams.practical(g.n), seed=32).tree_eids.tobytes()

    def ls_blob(threads):
        sub = ls_subgraph(g, AkpwParams.practical(g.n, lam=2), seed=33,
                          threads=threads)
        return (sub.tree_eids.tobytes() + sub.extra_eids.tobytes()
                + sub.removed_eids.tobytes())

    def sparsify_blob(_threads):
        gs = random_connected(150, 0.08, seed=34)
        ghat = ls_subgraph(gs, AkpwParams.practical(gs.n, lam=2), seed=34)
        h, audit = incremental_sparsify(
            gs, ghat, SparsifyParams(kappa=16.0, seed=34, c_is=2.5))
        return h.ew.tobytes() + h.eids.tobytes() + json.dumps(
            audit, sort_keys=True).encode()

    def chain_blob(threads):
        sub = random_connected(500, 0.012, seed=35)
        chain = build_chain(sub, SolveOptions(seed=35, threads=threads,
                                              deterministic=True))
        prof = [(lv.graph.n, lv.graph.m, lv.degree, lv.kappa, lv.interval)
                for lv in chain.levels]
        return json.dumps(prof).encode()

    def solve_blob(threads):
        sub = random_connected(400, 0.015, seed=36, weights="loguniform",
                               wmax=1e3)
        lap = laplacian(sub).tocsr()
        b = make_rng(36, "b").standard_normal(sub.n)
        b -= b.mean()
        x, rep = sdd_solve(lap, b, SolveOptions(
            epsilon=1e-6, seed=36, threads=threads, deterministic=True))
        return x.tobytes() + json.dumps(rep, sort_keys=True).encode()

    pipelines = [("partition", partition_blob), ("akpw", akpw_blob),
                 ("ls_subgraph", ls_blob), ("sparsify", sparsify_blob),
                 ("chain", chain_blob), ("solve", solve_blob)]
    for name, fn in pipelines:
        blobs = {t: fn(t) for t in (1, 2, 8)}
        assert blobs[1] == blobs[2] == blobs[8], f"{name} varies with threads"
    report("criterion 8 (determinism)", True,
           "6 pipelines byte-identical across 1, 2, 8 threads")


def test_criterion_9_work_accounting():
    """Instrumented matvecs match sum_i m_i prod_j ceil(sqrt(kappa_j))."""
    g = grid_graph(30, 30)
    opts = SolveOptions(seed=9, schedule=UniformSchedule(25.0), max_levels=3,
                        bottom_floor=8, delta=1.0 / 3.0 - 0.25, c_sigma=2.0)
    chain = build_chain(g, opts)
    assert len(chain.levels) == 3, f"got {len(chain.levels)} levels"
    chain.reset_counters()
    b = make_rng(909, "b").standard_normal(g.n)
    b -= b.mean()
    level_solve(chain, 1, b)
    predicted = 0.0
    measured = 0.0
    prod = 1
    for i, lv in enumerate(chain.levels, start=1):
        prod *= math.ceil(math.sqrt(lv.kappa))
        predicted += lv.graph.m * prod
        measured += lv.graph.m * chain.matvecs.get(i, 0)
    ratio = measured / predicted
    report("criterion 9 (work accounting)",
           0.5 <= ratio <= 2.0,
           f"3-level chain, kappas {[round(lv.kappa) for lv in chain.levels]}; "
           f"measured/predicted work = {ratio:.3f} (within factor 2)")


# -- fixture helpers -------------------------------------------------------------


def _random_tree(n, seed):
    rng = make_rng(seed, "tree")
    edges = [(int(rng.integers(0, v)), v, float(rng.uniform(1, 4)))
             for v in range(1, n)]
    return WeightedMultigraph.from_edges(n, edges)


def _sparse_graph(n, extra, seed):
    g = _random_tree(n, seed)
    rng = make_rng(seed, "extra")
    edges = [(int(u), int(v), float(w)) for u, v, w, _ in g.edge_tuples()]
    have = {(min(u, v), max(u, v)) for u, v, _ in edges}
    added = 0
    while added < extra:
        u, v = int(rng.integers(0, n)), int(rng.integers(0, n))
        key = (min(u, v), max(u, v))
        if u == v or key in have:
            continue
        edges.append((u, v, float(rng.uniform(0.5, 3.0))))
        have.add(key)
        added += 1
    return WeightedMultigraph.from_edges(n, edges)


def _two_scale_graph(seed):
    base = random_connected(90, 0.06, seed=seed)
    rng = make_rng(seed, "scales")
    heavy = 32.0 ** 20
    edges = []
    for u, v, w, _ in base.edge_tuples():
        scale = heavy if rng.random() < 0.4 else 1.0
        edges.append((u, v, w * scale))
    perm = rng.permutation(90)
    for a, b in zip(perm[:-1], perm[1:]):
        edges.append((int(a), int(b), heavy))
    return WeightedMultigraph.from_edges(90, edges)
