#!/usr/bin/env python3
"""End-to-end demo: solve a Laplacian system and verify against the dense
pseudoinverse oracle.

Usage: python scripts/solve_demo.py [--side 40] [--eps 1e-8]
"""

import argparse
import math
import time

import numpy as np

from laplax import SolveOptions, laplacian, sdd_solve
from laplax.generators import grid_graph
from laplax.oracles import dense_pinv_solve
from laplax.rng import make_rng


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--side", type=int, default=40)
    ap.add_argument("--eps", type=float, default=1e-8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    g = grid_graph(args.side, args.side)
    lap = laplacian(g).tocsr()
    b = make_rng(args.seed, "rhs").standard_normal(g.n)
    b -= b.mean()

    t0 = time.perf_counter()
    x, report = sdd_solve(lap, b, SolveOptions(epsilon=args.eps, seed=args.seed))
    solve_s = time.perf_counter() - t0

    ref = dense_pinv_solve(lap, b)
    d = x - ref
    d -= d.mean()
    err = math.sqrt(max(d @ (lap @ d), 0.0)) / math.sqrt(ref @ (lap @ ref))

    print(f"grid {args.side}x{args.side} (n={g.n}, m={g.m})")
    print(f"levels: {[(lv['n'], lv['m']) for lv in report['levels']]}")
    print(f"outer iterations: {report['outer_iters']}, matvecs: {report['matvecs']}")
    print(f"solve time: {solve_s:.2f}s")
    print(f"relative A-norm error vs dense oracle: {err:.3e} "
          f"({'<=' if err <= args.eps else '>'} eps={args.eps:g})")
    return 0 if err <= args.eps else 1


if __name__ == "__main__":
    raise SystemExit(main())
