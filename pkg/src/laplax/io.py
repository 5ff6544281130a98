"""File formats: edge-list text, Matrix Market, plain-text vectors.

Edge lists are one ``u v w`` triple per line, 0-indexed, ``#`` comments;
duplicate lines become parallel edges.  SDD matrices load from Matrix
Market coordinate symmetric real files.
"""

from __future__ import annotations

import numpy as np
import scipy.io
import scipy.sparse as sp

from .graphs import WeightedMultigraph
from .sdd import SddMatrix


def read_edgelist(path: str, n: int | None = None) -> WeightedMultigraph:
    edges = []
    max_v = -1
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) < 2:
                raise ValueError(f"{path}:{lineno}: expected 'u v [w]'")
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) > 2 else 1.0
            edges.append((u, v, w))
            max_v = max(max_v, u, v)
    count = n if n is not None else max_v + 1
    return WeightedMultigraph.from_edges(count, edges)


def write_edgelist(path: str, g: WeightedMultigraph, header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"# {header}\n")
        fh.write(f"# n={g.n} m={g.m}\n")
        for u, v, w, _eid in g.edge_tuples():
            fh.write(f"{u} {v} {w:.17g}\n")


def read_matrix_market(path: str) -> SddMatrix:
    mat = scipy.io.mmread(path)
    return SddMatrix(sp.csr_matrix(mat))


def write_matrix_market(path: str, mat) -> None:
    scipy.io.mmwrite(path, sp.coo_matrix(mat), symmetry="symmetric")


def read_vector(path: str) -> np.ndarray:
    vals = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if line:
                vals.extend(float(tok) for tok in line.split())
    return np.array(vals, dtype=np.float64)


def write_vector(path: str, x: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v in x:
            fh.write(f"{v:.17g}\n")
