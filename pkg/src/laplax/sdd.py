"""SDD matrices and the double-cover reduction to a graph Laplacian.

An SDD system splits each variable x_i into a plus/minus pair: negative
off-diagonals become edges within the two copies, positive off-diagonals
become edges across the copies, and each row's diagonal excess becomes an
edge of half that weight between the vertex's own pair.  Solving the lifted
Laplacian system against (b, -b) and mapping back via
x_i = (x_i+ - x_i-) / 2 solves the original system; relative error in the
lifted energy norm carries over to the original A-norm unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graphs import WeightedMultigraph


class NotSddError(ValueError):
    """Input matrix violates symmetric diagonal dominance."""

    def __init__(self, row: int, diag: float, offsum: float):
        super().__init__(
            f"row {row} breaks diagonal dominance: |diag| {diag:.6g} < "
            f"off-diagonal sum {offsum:.6g}")
        self.row = row


@dataclass
class SddMatrix:
    """Symmetric diagonally dominant sparse matrix."""

    mat: sp.csr_matrix

    def __post_init__(self):
        m = sp.csr_matrix(self.mat)
        if m.shape[0] != m.shape[1]:
            raise ValueError("matrix must be square")
        sym_gap = abs(m - m.T)
        if sym_gap.nnz and sym_gap.max() > 1e-9 * max(abs(m).max(), 1.0):
            raise ValueError("matrix must be symmetric")
        self.mat = m
        self.check_sdd()

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    def check_sdd(self, tol: float = 1e-9) -> None:
        m = self.mat
        diag = m.diagonal()
        offsum = np.abs(m).sum(axis=1).A1 - np.abs(diag)
        slack = tol * max(np.abs(m).max(), 1.0)
        bad = np.nonzero(diag + slack < offsum)[0]
        if len(bad):
            r = int(bad[0])
            raise NotSddError(r, float(diag[r]), float(offsum[r]))

    def is_laplacian(self, tol: float = 1e-9) -> bool:
        m = self.mat
        coo = m.tocoo()
        off_pos = np.any(coo.data[coo.row != coo.col] > tol)
        rowsum = np.abs(np.asarray(m.sum(axis=1)).ravel()).max() if m.nnz else 0.0
        return not off_pos and rowsum <= tol * max(np.abs(m).max(), 1.0)


@dataclass
class GrembanBackMap:
    """Recovers the original solution from the lifted one."""

    n: int

    def __call__(self, x_lifted: np.ndarray) -> np.ndarray:
        if len(x_lifted) != 2 * self.n:
            raise ValueError("lifted solution has wrong length")
        return 0.5 * (x_lifted[: self.n] - x_lifted[self.n:])

    def lift_rhs(self, b: np.ndarray) -> np.ndarray:
        return np.concatenate([b, -b])


def sdd_to_laplacian(a: SddMatrix | sp.spmatrix, b: np.ndarray
                     ) -> tuple[WeightedMultigraph, np.ndarray, GrembanBackMap]:
    """Double-cover reduction of an SDD system to a Laplacian system.

    Returns the lifted graph on 2n vertices (i maps to i and n+i), the
    lifted right-hand side (b, -b), and the back map.
    """
    if not isinstance(a, SddMatrix):
        a = SddMatrix(sp.csr_matrix(a))
    n = a.n
    coo = sp.triu(a.mat, k=1).tocoo()
    diag = a.mat.diagonal()
    edges: list[tuple[int, int, float]] = []
    offsum = np.zeros(n)
    for i, j, v in zip(coo.row, coo.col, coo.data):
        i, j, v = int(i), int(j), float(v)
        if v == 0.0:
            continue
        offsum[i] += abs(v)
        offsum[j] += abs(v)
        if v < 0:
            edges.append((i, j, -v))
            edges.append((n + i, n + j, -v))
        else:
            edges.append((i, n + j, v))
            edges.append((j, n + i, v))
    excess = diag - offsum
    for i in range(n):
        if excess[i] > 1e-12 * max(diag[i], 1.0):
            edges.append((i, n + i, float(excess[i]) / 2.0))
    graph = WeightedMultigraph.from_edges(2 * n, edges)
    back = GrembanBackMap(n)
    return graph, back.lift_rhs(np.asarray(b, dtype=np.float64)), back
