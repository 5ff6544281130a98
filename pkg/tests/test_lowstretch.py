import math

import numpy as np
import pytest

from laplax import (
    AkpwParams,
    WeightedMultigraph,
    akpw,
    ls_subgraph,
    normalize_weights,
    sparse_akpw,
    total_stretch,
    weight_classes,
    well_space,
)
from laplax.decompose import partition
from laplax.generators import cycle_graph, grid_graph, random_connected
from laplax.graphs import contract, per_edge_stretch
from laplax.lowstretch import _akpw_engine, boruvka_msf, run_segment
from laplax.oracles import oracle_total_stretch
from laplax.rng import make_rng, split_seed


def is_spanning_forest(g, eids):
    sub = g.edge_subgraph(eids)
    return (sub.num_components() == g.num_components()
            and len(eids) == g.n - g.num_components())


def params_for(g, lam=2, beta=None):
    return AkpwParams.practical(g.n, lam=lam, beta=beta)


class TestAkpw:
    def test_tree_input_returns_itself(self):
        g = random_tree(40, seed=2)
        sub = akpw(g, params_for(g), seed=5)
        assert set(sub.tree_eids) == set(int(e) for e in g.eids)
        assert len(sub.extra_eids) == 0
        assert sub.stats["total_stretch"] == pytest.approx(g.m)

    def test_cycle_gives_spanning_path(self):
        g = cycle_graph(5)
        sub = akpw(g, params_for(g), seed=3)
        assert is_spanning_forest(g, sub.tree_eids)
        assert len(sub.tree_eids) == 4
        assert sub.stats["total_stretch"] == pytest.approx(8.0)

    @pytest.mark.parametrize("seed", range(6))
    def test_random_graphs_spanning_acyclic_oracle(self, seed):
        g = random_connected(90, 0.07, seed=seed)
        sub = akpw(g, params_for(g), seed=seed)
        assert is_spanning_forest(g, sub.tree_eids)
        oracle = oracle_total_stretch(g, sub.tree_eids)
        assert sub.stats["total_stretch"] == pytest.approx(oracle, rel=1e-11)

    def test_weighted_graph(self):
        g = random_connected(70, 0.08, seed=11, weights="loguniform", wmax=5000)
        sub = akpw(g, params_for(g), seed=1)
        assert is_spanning_forest(g, sub.tree_eids)
        stretch = sub.stats["per_edge_stretch"]
        assert np.all(np.isfinite(stretch))
        per_class_total = sum(sub.stats["per_class_stretch"].values())
        assert per_class_total == pytest.approx(sub.stats["total_stretch"])

    def test_unit_weight_stretch_at_least_one(self):
        g = random_connected(60, 0.1, seed=4)
        sub = akpw(g, params_for(g), seed=4)
        assert np.all(sub.stats["per_edge_stretch"] >= 1 - 1e-12)

    def test_determinism(self):
        g = random_connected(50, 0.1, seed=9)
        a = akpw(g, params_for(g), seed=7)
        b = akpw(g, params_for(g), seed=7)
        assert np.array_equal(a.tree_eids, b.tree_eids)

    def test_disconnected_input_spanning_forest(self):
        a = grid_graph(4, 4)
        edges = [(u, v, w) for u, v, w, _ in a.edge_tuples()]
        edges += [(u + 16, v + 16, w) for u, v, w, _ in a.edge_tuples()]
        g = WeightedMultigraph.from_edges(32, edges)
        sub = akpw(g, params_for(g), seed=0)
        assert is_spanning_forest(g, sub.tree_eids)

    def test_provenance_covers_all_edges(self):
        g = random_connected(60, 0.08, seed=13)
        sub = akpw(g, params_for(g), seed=13)
        assert set(sub.provenance) == set(int(e) for e in g.eids)
        kinds = {sub.provenance[int(e)][0] for e in g.eids}
        assert kinds <= {"tree", "contracted"}

    def test_class_sizes_nonincreasing(self):
        g = random_connected(80, 0.06, seed=21, weights="loguniform", wmax=1e5)
        sub = akpw(g, params_for(g), seed=21)
        log = sub.stats["class_sizes"]
        by_class: dict[int, list] = {}
        for j in sorted(log):
            for i, sz in log[j].items():
                by_class.setdefault(i, []).append(sz)
        for sizes in by_class.values():
            assert all(a >= b for a, b in zip(sizes, sizes[1:]))


class TestTheoryMode:
    def test_tree_theory_formulas(self):
        import math

        n = 256
        p = AkpwParams.tree_theory(n)
        ln = math.log2(n)
        y = 2.0 ** math.sqrt(6.0 * ln * math.log2(int(ln)))
        assert p.y == pytest.approx(y)
        assert p.tau == math.ceil(3.0 * ln / math.log2(y))
        assert p.z == pytest.approx(4.0 * 272.0 * y * p.tau * ln ** 3)
        assert p.theory

    def test_subgraph_theory_formulas(self):
        import math

        n, lam = 256, 2
        ln = math.log2(n)
        c2 = 2.0 * (4.0 * 272.0 * (lam + 1)) ** 0.5
        beta = 3.0 * c2 * ln ** 3
        p = AkpwParams.subgraph_theory(n, lam, beta)
        assert p.y == pytest.approx(beta / (c2 * ln ** 3))
        assert p.z == pytest.approx(4.0 * 272.0 * p.y * (lam + 1) * ln ** 3)
        assert p.theta == pytest.approx((ln ** 3 / beta) ** lam)
        with pytest.raises(ValueError, match="theory mode needs beta"):
            AkpwParams.subgraph_theory(n, lam, beta=1.0)

    def test_theory_mode_runs_on_tiny_graph(self):
        g = random_connected(30, 0.15, seed=1)
        sub = akpw(g, AkpwParams.tree_theory(g.n), seed=1)
        assert is_spanning_forest(g, sub.tree_eids)


class TestExpandedRadius:
    def test_component_weighted_radius_bound(self):
        # weighted radius of iteration-j components, measured in the
        # expanded-out graph from the expanded center, stays below z^(j+1)
        import scipy.sparse.csgraph as csgraph

        g = random_connected(60, 0.08, seed=3, weights="loguniform", wmax=800)
        gnorm, _ = normalize_weights(g)
        params = params_for(g)
        from laplax.graphs import class_of_weight

        class_of = {int(gnorm.eids[i]): class_of_weight(float(gnorm.ew[i]), params.z)
                    for i in range(gnorm.m)}
        trace: list = []
        _akpw_engine(gnorm, class_of, params, seed=17, window=params.tau,
                     collect_extras=False, trace=trace)
        dist_mat = gnorm.distance_csr()
        for rec in trace:
            bound = params.z ** (rec["j"] + 1)
            for members, center in zip(rec["components_expanded"],
                                       rec["centers_expanded"]):
                if len(members) == 1:
                    continue
                mask = np.zeros(gnorm.n, dtype=bool)
                mask[members] = True
                sub = dist_mat[members][:, members]
                src = np.searchsorted(members, center)
                d = csgraph.dijkstra(sub, directed=False, indices=src)
                assert np.isfinite(d).all()
                assert d.max() <= bound + 1e-9


class TestSparseAkpw:
    def test_large_lambda_degenerates_to_tree(self):
        g = random_connected(50, 0.1, seed=6)
        params = AkpwParams.practical(g.n, lam=12)
        sub = sparse_akpw(g, params, seed=6)
        assert len(sub.extra_eids) == 0
        assert is_spanning_forest(g, sub.tree_eids)

    def test_extras_are_survivors_after_lambda_rounds(self):
        # single class, lam=1: extras must equal the class-1 edges still
        # alive after the first contraction, re-derived independently
        g = grid_graph(9, 9)
        params = AkpwParams.practical(g.n, lam=1)
        seed = 3
        sub = sparse_akpw(g, params, seed=seed)
        gnorm, _ = normalize_weights(g)
        ecg = weight_classes(gnorm, params.z)
        dec = partition(ecg, rho=params.z / 4.0,
                        seed=split_seed(seed, "iter", 1),
                        c1=params.c1, retry_limit=params.retry_limit)
        _, survival = contract(gnorm, dec.assignment)
        survivors = set(survival)
        got = set(int(e) for e in sub.extra_eids) | (
            set(int(e) for e in sub.tree_eids) & survivors)
        assert got == survivors

    def test_edge_count_and_provenance(self):
        g = random_connected(120, 0.05, seed=8, weights="loguniform", wmax=4000)
        params = AkpwParams.practical(g.n, lam=2)
        sub = sparse_akpw(g, params, seed=8)
        assert sub.edge_count() == len(sub.tree_eids) + len(sub.extra_eids)
        assert len(sub.tree_eids) == g.n - g.num_components()
        assert set(sub.provenance) == set(int(e) for e in g.eids)
        carried = {e for e, p in sub.provenance.items() if p[0] == "carried"}
        assert carried >= set(int(e) for e in sub.extra_eids)
        # every carried or tree edge has stretch exactly 1 in the subgraph
        stretch = sub.stats["per_edge_stretch"]
        for e in np.concatenate([sub.tree_eids, sub.extra_eids]):
            assert stretch[g.edge_index(int(e))] <= 1 + 1e-12

    def test_disjoint_tree_and_extras(self):
        g = random_connected(80, 0.07, seed=15)
        sub = sparse_akpw(g, AkpwParams.practical(g.n, lam=1), seed=15)
        assert not (set(map(int, sub.tree_eids)) & set(map(int, sub.extra_eids)))


class TestWellSpace:
    def build(self, counts, z=16.0):
        # synthetic graph with `counts[i]` edges in class i+1
        edges = []
        v = 0
        for i, c in enumerate(counts):
            w = z ** i  # class i+1
            for _ in range(c):
                edges.append((v, v + 1, w))
                v += 1
        g = WeightedMultigraph.from_edges(v + 1 if edges else 1, edges)
        return weight_classes(g, z)

    def test_single_class_removes_nothing(self):
        ecg = self.build([10])
        _, removed, specials = well_space(ecg, tau=2, theta=0.5)
        assert len(removed) == 0

    def test_forced_zero_window(self):
        ecg = self.build([10, 0, 0, 10])
        gprime, removed, specials = well_space(ecg, tau=2, theta=0.5)
        assert len(removed) == 0  # the chosen window [2, 3] is empty
        assert specials == [4]
        assert gprime.m == 20

    def test_sliding_window_oracle_and_fraction(self):
        rng = make_rng(5, "hist")
        for trial in range(20):
            counts = [int(c) for c in rng.integers(0, 12, size=rng.integers(4, 14))]
            if sum(counts) == 0:
                continue
            tau = int(rng.integers(1, 4))
            theta = float(rng.uniform(0.2, 1.0))
            ecg = self.build(counts)
            _, removed, _ = well_space(ecg, tau=tau, theta=theta)
            assert len(removed) <= theta * ecg.base.m + 1e-9
            # brute-force: removal per block equals the min sliding window
            block = max(tau, math.ceil(tau / theta))
            sizes = {i + 1: c for i, c in enumerate(counts)}
            expected = 0
            max_class = len(counts)
            for lo in range(1, max_class + 1, block):
                hi = min(lo + block - 1, max_class)
                if hi - lo + 1 < tau:
                    continue
                windows = [sum(sizes.get(i, 0) for i in range(a, a + tau))
                           for a in range(lo, hi - tau + 2)]
                best = min(windows)
                total = sum(sizes.get(i, 0) for i in range(lo, hi + 1))
                if best <= theta * total:
                    expected += best
            assert len(removed) == expected


class TestLsSubgraph:
    def test_no_removal_matches_sparse_akpw(self):
        g = random_connected(70, 0.08, seed=4)  # unit weights: single class
        params = AkpwParams.practical(g.n, lam=2)
        a = ls_subgraph(g, params, seed=9)
        b = sparse_akpw(g, params, seed=9)
        assert len(a.removed_eids) == 0
        assert np.array_equal(a.tree_eids, b.tree_eids)
        assert np.array_equal(a.extra_eids, b.extra_eids)

    def test_edge_count_identity(self):
        for seed in range(5):
            g = random_connected(150, 0.05, seed=seed, weights="loguniform", wmax=1e6)
            sub = ls_subgraph(g, AkpwParams.practical(g.n, lam=2), seed=seed)
            deficiency = sub.stats["components_after_removal"] - g.num_components()
            assert sub.edge_count() == (g.n - 1) + len(sub.extra_eids) + \
                len(sub.removed_eids) - deficiency

    def test_two_parts_inequality(self):
        # stretch of G over the final subgraph <= |removed| + stretch of
        # G-minus-removed over the subgraph-without-removed
        for seed in range(6):
            g = two_scale_graph(seed)
            sub = ls_subgraph(g, AkpwParams.practical(g.n, lam=2), seed=seed)
            total = sub.stats["total_stretch"]
            keep = np.setdiff1d(g.eids, sub.removed_eids)
            gprime = g.edge_subgraph(keep)
            inner_eids = np.concatenate([sub.tree_eids, sub.extra_eids])
            inner = total_stretch(gprime, inner_eids)
            assert total <= len(sub.removed_eids) + inner + 1e-9

    def test_dependency_break_fires_on_two_scales(self):
        g = two_scale_graph(1)
        sub = ls_subgraph(g, AkpwParams.practical(g.n, lam=2), seed=1)
        assert len(sub.stats["segments"]) >= 2

    def test_segment_isolation(self):
        # re-running only the upper segment with the same seed reproduces it
        g = two_scale_graph(2)
        params = AkpwParams.practical(g.n, lam=2)
        seed = 5
        sub = ls_subgraph(g, params, seed=seed)
        segs = sub.stats["segments"]
        assert len(segs) >= 2
        gnorm, _ = normalize_weights(g)
        from laplax.graphs import class_of_weight

        class_of = {int(gnorm.eids[i]): class_of_weight(float(gnorm.ew[i]), params.z)
                    for i in range(gnorm.m)}
        ecg = weight_classes(gnorm, params.z)
        gprime, removed, specials = well_space(ecg, params.tau, params.theta)
        msf = boruvka_msf(gprime)
        upper = segs[-1]
        rerun = run_segment(gprime, class_of, msf, params, upper["start"],
                            math.inf, seed, first_segment=False)
        seg_tree_eids = {e for e, p in sub.provenance.items()
                        if p[0] == "tree" and p[1] >= upper["start"]}
        assert set(rerun.tree) == seg_tree_eids
        assert rerun.extras <= set(sub.provenance)

    def test_threads_do_not_change_output(self):
        g = two_scale_graph(3)
        params = AkpwParams.practical(g.n, lam=2)
        a = ls_subgraph(g, params, seed=2, threads=1)
        b = ls_subgraph(g, params, seed=2, threads=4)
        assert np.array_equal(a.tree_eids, b.tree_eids)
        assert np.array_equal(a.extra_eids, b.extra_eids)
        assert np.array_equal(a.removed_eids, b.removed_eids)

    def test_spanning_with_extras_and_removed(self):
        g = two_scale_graph(4)
        sub = ls_subgraph(g, AkpwParams.practical(g.n, lam=2), seed=4)
        all_eids = sub.subgraph_eids()
        h = g.edge_subgraph(all_eids)
        assert h.num_components() == g.num_components()
        stretch = per_edge_stretch(g, all_eids)
        assert np.all(np.isfinite(stretch))
        assert sub.stats["total_stretch"] == pytest.approx(
            oracle_total_stretch(g, all_eids), rel=1e-11)


def random_tree(n, seed):
    rng = make_rng(seed, "t")
    edges = [(int(rng.integers(0, v)), v, float(rng.uniform(1, 4))) for v in range(1, n)]
    return WeightedMultigraph.from_edges(n, edges)


def two_scale_graph(seed):
    """Two weight scales separated far enough to trigger well-spacing."""
    base = random_connected(90, 0.06, seed=seed)
    rng = make_rng(seed, "scales")
    heavy = 32.0 ** 20
    edges = []
    for u, v, w, _ in base.edge_tuples():
        scale = heavy if rng.random() < 0.4 else 1.0
        edges.append((u, v, w * scale))
    # a heavy backbone so the upper class is connected enough to matter
    perm = rng.permutation(90)
    for a, b in zip(perm[:-1], perm[1:]):
        edges.append((int(a), int(b), heavy))
    return WeightedMultigraph.from_edges(90, edges)
