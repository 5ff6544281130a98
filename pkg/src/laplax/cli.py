"""Command-line front door: partition / lowstretch / solve / verify / bench.

Exit codes: 0 success, 1 input error, 2 algorithmic failure (retry limit or
iteration cap), with diagnostics on stderr.  Seeds are 64-bit and every
stochastic stage derives its own sub-seed, so runs are reproducible; with
--deterministic the reports are byte-identical across thread counts (wall
time is zeroed, JSON keys are sorted).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys

import numpy as np

from . import generators, io as lio
from .decompose import (
    PartitionRetryError,
    component_strong_radii,
    count_class_cuts,
    jittered_assignment,
    partition,
)
from .graphs import EdgeClassedGraph, laplacian, normalize_weights, total_stretch, weight_classes
from .lowstretch import AkpwParams, akpw, ls_subgraph
from .oracles import dense_pinv_solve, pencil_bounds
from .rng import make_rng, split_seed
from .sdd import SddMatrix
from .solver import (
    ExplicitSchedule,
    GeometricSchedule,
    SolveIterationError,
    SolveOptions,
    UniformSchedule,
    sdd_solve,
)
from .sparsify import SparsifyError

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib


@dataclasses.dataclass
class RunConfig:
    """Flat subcommand configuration; round-trips through TOML losslessly."""

    subcommand: str = ""
    seed: int = 0
    threads: int = 1
    deterministic: bool = False
    params: dict = dataclasses.field(default_factory=dict)

    def to_toml(self) -> str:
        lines = [f'subcommand = "{self.subcommand}"',
                 f"seed = {self.seed}",
                 f"threads = {self.threads}",
                 f"deterministic = {str(self.deterministic).lower()}",
                 "", "[params]"]
        for key in sorted(self.params):
            lines.append(f"{key} = {_toml_value(self.params[key])}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_toml(cls, text: str) -> "RunConfig":
        data = tomllib.loads(text)
        return cls(subcommand=data.get("subcommand", ""),
                   seed=int(data.get("seed", 0)),
                   threads=int(data.get("threads", 1)),
                   deterministic=bool(data.get("deterministic", False)),
                   params=dict(data.get("params", {})))


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int,)):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    return json.dumps(str(v))


def _dump_json(obj, path: str | None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2, default=_jsonable)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not JSON-serializable: {type(v)}")


def _threads(args) -> int:
    env = os.environ.get("LAPLAX_THREADS")
    if args.threads is not None:
        return args.threads
    if env:
        return max(1, int(env))
    return 1


def parse_schedule(text: str):
    kind, _, rest = text.partition(":")
    if kind == "uniform":
        return UniformSchedule(kappa=float(rest or 500.0))
    if kind == "geometric":
        fields = dict(kv.split("=") for kv in rest.split(",") if kv)
        return GeometricSchedule(lam=float(fields.get("lam", 13)),
                                 c4=float(fields.get("c4", 7 / 13)),
                                 levels=int(fields.get("L", 4)))
    if kind == "explicit":
        return ExplicitSchedule(tuple(float(k) for k in rest.split(",") if k))
    raise ValueError(f"unknown schedule {text!r}")


# -- subcommands ---------------------------------------------------------------


def _cmd_partition(args) -> int:
    g = lio.read_edgelist(args.input)
    if args.rho < 1:
        print("error: --rho must be >= 1", file=sys.stderr)
        return 1
    gnorm, _ = normalize_weights(g)
    if args.classes and not _is_number(args.classes):
        class_map = [int(line.split()[0]) for line in open(args.classes)
                     if line.strip() and not line.startswith("#")]
        if len(class_map) != g.m:
            print("error: class file must list one class per edge", file=sys.stderr)
            return 1
        classes: dict[int, list] = {}
        for eid, c in zip(gnorm.eids, class_map):
            classes.setdefault(c, []).append(int(eid))
        ecg = EdgeClassedGraph(base=gnorm, z=2.0,
                               classes={c: np.array(sorted(v), dtype=np.int64)
                                        for c, v in sorted(classes.items())})
    else:
        z = float(args.classes) if args.classes else 4.0
        ecg = weight_classes(gnorm, z)
    dec = partition(ecg, rho=args.rho, seed=args.seed)
    lines = "\n".join(str(int(c)) for c in dec.assignment)
    if args.output in (None, "-"):
        print(lines)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(lines + "\n")
    radii = component_strong_radii(g, dec)
    audit = {"per_class_cut": {str(k): v for k, v in dec.per_class_cut.items()},
             "retries": dec.retries, "rounds": dec.rounds,
             "components": dec.num_components,
             "max_strong_radius": float(radii.max()) if len(radii) else 0.0}
    _dump_json(audit, args.report)
    return 0


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def _cmd_lowstretch(args) -> int:
    g = lio.read_edgelist(args.input)
    params = AkpwParams.practical(g.n, lam=args.lam, beta=args.beta,
                                  z=args.z, tau=args.tau)
    threads = _threads(args)
    if args.mode == "tree":
        sub = akpw(g, params, seed=args.seed)
    else:
        sub = ls_subgraph(g, params, seed=args.seed, threads=threads)
    if args.out:
        lio.write_edgelist(args.out, g.edge_subgraph(sub.subgraph_eids()),
                           header=f"low-stretch {args.mode}")
    summary = {
        "total_stretch": sub.stats.get("total_stretch"),
        "tree_edges": sub.stats["tree_edges"],
        "extra_edges": sub.stats["extra_edges"],
        "removed_edges": sub.stats["removed_edges"],
        "per_class_stretch": {str(k): v
                              for k, v in sub.stats.get("per_class_stretch", {}).items()},
        "generic_bucket_used": sub.stats["generic_bucket_used"],
    }
    _dump_json(summary, args.report)
    return 0


def _cmd_solve(args) -> int:
    a = lio.read_matrix_market(args.matrix)
    b = lio.read_vector(args.rhs)
    opts = SolveOptions(epsilon=args.eps, schedule=parse_schedule(args.schedule),
                        seed=args.seed, deterministic=args.deterministic,
                        threads=_threads(args), outer=args.outer)
    x, report = sdd_solve(a, b, opts)
    if args.solution:
        lio.write_vector(args.solution, x)
    else:
        for v in x:
            print(f"{v:.17g}")
    _dump_json(report, args.report)
    return 0


def _cmd_verify(args) -> int:
    if args.kind == "sandwich":
        h = lio.read_edgelist(args.h)
        g = lio.read_edgelist(args.g, n=h.n)
        bounds = pencil_bounds(laplacian(h), laplacian(g))
        out = {"lambda_min": bounds.lambda_min, "lambda_max": bounds.lambda_max}
        if args.kappa:
            out["sandwiched"] = bounds.sandwiched(args.kappa)
        _dump_json(out, args.report)
        return 0
    if args.kind == "stretch":
        g = lio.read_edgelist(args.g)
        h = lio.read_edgelist(args.h, n=g.n)
        # oracle distance over h's own metric; edge ids are not needed
        total = 0.0
        from .oracles import dijkstra_from

        dist_cache = {}
        for u, v, w, _eid in g.edge_tuples():
            if u not in dist_cache:
                dist_cache[u] = dijkstra_from(h, u)
            d = dist_cache[u][v]
            if not np.isfinite(d):
                print(f"error: subgraph disconnects ({u}, {v})", file=sys.stderr)
                return 2
            total += d / w
        _dump_json({"total_stretch": total}, args.report)
        return 0
    if args.kind == "solve":
        a = lio.read_matrix_market(args.matrix)
        b = lio.read_vector(args.rhs)
        x = lio.read_vector(args.solution)
        if a.is_laplacian():
            ref = dense_pinv_solve(a.mat, b)
            lap = a.mat
        else:
            dense = a.mat.toarray()
            ref = np.linalg.solve(dense, b)
            lap = a.mat
        err = x - ref
        num = math.sqrt(max(float(err @ (lap @ err)), 0.0))
        den = math.sqrt(max(float(ref @ (lap @ ref)), 1e-300))
        rel = num / den
        _dump_json({"relative_a_norm_error": rel, "pass": bool(rel <= args.eps)},
                   args.report)
        return 0 if rel <= args.eps else 2
    print(f"error: unknown verify kind {args.kind}", file=sys.stderr)
    return 1


def _make_family(family: str, n: int, seed: int):
    if family == "grid":
        side = int(math.isqrt(n))
        return generators.grid_graph(side, side)
    if family == "cycle":
        return generators.cycle_graph(n)
    if family == "random":
        return generators.random_connected(n, 4.0 / n, seed)
    if family == "geometric":
        return generators.random_geometric(n, 1.5 / math.sqrt(n), seed)
    raise ValueError(f"unknown family {family!r}")


def _cmd_bench(args) -> int:
    rows: list[dict] = []
    if args.mode == "jitter":
        g = generators.cycle_graph(args.n)
        spacing = max(args.n // max(args.centers, 1), 1)
        centers = np.arange(0, g.n, spacing)
        for r in args.values:
            for s in range(args.seeds):
                rng = make_rng(split_seed(args.seed, "bench", int(r), s))
                jitters = rng.integers(0, int(r) + 1, size=len(centers))
                owner, _ = jittered_assignment(g, centers, jitters, cap=g.n)
                cut = int(np.sum(owner[g.eu] != owner[g.ev]))
                rows.append({"family": "cycle", "n": g.n, "m": g.m, "R": r,
                             "seed": s, "cut_fraction": cut / g.m})
    elif args.mode == "partition":
        for r in args.values:
            for s in range(args.seeds):
                g = _make_family(args.family, args.n, split_seed(args.seed, s))
                gnorm, _ = normalize_weights(g)
                ecg = weight_classes(gnorm, 4.0)
                try:
                    dec = partition(ecg, rho=r, seed=split_seed(args.seed, "p", int(r), s))
                except PartitionRetryError:
                    rows.append({"family": args.family, "n": g.n, "m": g.m,
                                 "rho": r, "seed": s, "radius_audit": "retry-limit"})
                    continue
                radii = component_strong_radii(g, dec)
                cuts = count_class_cuts(ecg, dec.assignment)
                rows.append({
                    "family": args.family, "n": g.n, "m": g.m, "rho": r, "seed": s,
                    "rounds": dec.rounds, "retries": dec.retries,
                    "components": dec.num_components,
                    "cut_fraction": sum(cuts.values()) / max(g.m, 1),
                    "radius_audit": "pass" if radii.max() <= r else "FAIL",
                })
    elif args.mode == "lowstretch":
        for s in range(args.seeds):
            g = _make_family(args.family, args.n, split_seed(args.seed, s))
            sub = ls_subgraph(g, AkpwParams.practical(g.n), seed=s)
            rows.append({"family": args.family, "n": g.n, "m": g.m, "seed": s,
                         "total_stretch": sub.stats["total_stretch"],
                         "tree_edges": sub.stats["tree_edges"],
                         "extra_edges": sub.stats["extra_edges"],
                         "removed_edges": sub.stats["removed_edges"]})
    elif args.mode == "solve":
        for s in range(args.seeds):
            g = _make_family(args.family, args.n, split_seed(args.seed, s))
            lap = laplacian(g)
            rng = make_rng(args.seed, "rhs", s)
            b = rng.standard_normal(g.n)
            b -= b.mean()
            a = SddMatrix(lap.tocsr())
            x, report = sdd_solve(a, b, SolveOptions(
                epsilon=args.eps, seed=s, deterministic=True))
            rows.append({"family": args.family, "n": g.n, "m": g.m, "seed": s,
                         "outer_iters": report["outer_iters"],
                         "matvecs": report["matvecs"],
                         "chain_profile": "|".join(
                             f"{lv['n']}/{lv['m']}" for lv in report["levels"])})
    else:
        print(f"error: unknown bench mode {args.mode}", file=sys.stderr)
        return 1
    if not rows:
        print("error: nothing to benchmark", file=sys.stderr)
        return 1
    keys = sorted({k for row in rows for k in row})
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="")
    try:
        writer = csv.DictWriter(out, fieldnames=keys)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


# -- argument parsing ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="laplax",
                                 description="SDD solver toolkit built on "
                                             "low-diameter decomposition")
    ap.add_argument("--config", help="TOML file overriding defaults")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("partition", help="low-diameter decomposition")
    p.add_argument("--input", required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--classes", help="class base z (number) or per-edge class file")
    p.add_argument("--output", help="component id per vertex (default stdout)")
    p.add_argument("--report", help="JSON audit path (default stdout)")
    p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("lowstretch", help="low-stretch tree / subgraph")
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=("tree", "subgraph"), default="subgraph")
    p.add_argument("--lambda", dest="lam", type=int, default=2)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--z", type=float, default=32.0)
    p.add_argument("--tau", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="subgraph edge list path")
    p.add_argument("--report", help="JSON summary path (default stdout)")
    p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("solve", help="solve an SDD system")
    p.add_argument("--matrix", required=True, help="Matrix Market file")
    p.add_argument("--rhs", required=True, help="vector file")
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--schedule", default="uniform:500")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outer", choices=("refine", "cg"), default="refine")
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--solution", help="write x here (default stdout)")
    p.add_argument("--report", help="JSON report path (default stdout)")
    p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("verify", help="oracle-backed checks")
    p.add_argument("kind", choices=("sandwich", "stretch", "solve"))
    p.add_argument("--g", help="graph edge list")
    p.add_argument("--h", help="subgraph / second graph edge list")
    p.add_argument("--kappa", type=float)
    p.add_argument("--matrix")
    p.add_argument("--rhs")
    p.add_argument("--solution")
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--report", help="JSON path (default stdout)")
    p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("bench", help="parameter sweeps, one CSV row per run")
    p.add_argument("--mode", choices=("partition", "jitter", "lowstretch", "solve"),
                   default="partition")
    p.add_argument("--family", choices=("grid", "random", "geometric", "cycle"),
                   default="grid")
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--values", type=float, nargs="*", default=[8.0],
                   help="rho values (partition) or R values (jitter)")
    p.add_argument("--centers", type=int, default=40)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--threads", type=int, default=None)
    return ap


def _apply_config(args, parser) -> None:
    if not args.config:
        return
    with open(args.config, "rb") as fh:
        data = tomllib.load(fh)
    cfg = RunConfig(subcommand=data.get("subcommand", args.command),
                    seed=int(data.get("seed", 0)),
                    threads=int(data.get("threads", 1)),
                    deterministic=bool(data.get("deterministic", False)),
                    params=dict(data.get("params", {})))
    for key, value in cfg.params.items():
        if hasattr(args, key):
            setattr(args, key, value)
    if hasattr(args, "seed"):
        args.seed = cfg.seed
    if hasattr(args, "threads") and args.threads is None:
        args.threads = cfg.threads
    if hasattr(args, "deterministic") and cfg.deterministic:
        args.deterministic = True


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args, parser)
        if args.command == "partition":
            return _cmd_partition(args)
        if args.command == "lowstretch":
            return _cmd_lowstretch(args)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "bench":
            return _cmd_bench(args)
        parser.error(f"unknown command {args.command}")
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (PartitionRetryError, SparsifyError, SolveIterationError) as exc:
        print(f"algorithmic failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
