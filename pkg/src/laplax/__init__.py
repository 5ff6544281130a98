"""laplax: graph decomposition, low-stretch subgraphs, and an SDD solver.

The pipeline: low-diameter decomposition with jittered ball growing feeds a
low-stretch spanning tree / ultra-sparse subgraph construction, which feeds
incremental sparsification; alternating sparsify and greedy-elimination
steps build a preconditioner chain that a recursive preconditioned
Chebyshev iteration traverses.  Exact dense oracles verify every guarantee
at test scale.
"""

from .graphs import (
    Ball,
    DisconnectedSubgraphError,
    EdgeClassedGraph,
    WeightedMultigraph,
    bfs_ball,
    contract,
    laplacian,
    normalize_weights,
    per_edge_stretch,
    total_stretch,
    weight_classes,
)
from .decompose import (
    Decomposition,
    PartitionRetryError,
    SplitParams,
    jittered_assignment,
    partition,
    split_graph,
)
from .lowstretch import AkpwParams, StretchSubgraph, akpw, ls_subgraph, sparse_akpw, well_space
from .eliminate import EliminationRecord, eliminate_solve, greedy_elimination
from .sparsify import SparsifyParams, incremental_sparsify
from .solver import PreconditionerChain, SolveOptions, build_chain, level_solve, sdd_solve
from .sdd import SddMatrix, sdd_to_laplacian

__version__ = "0.1.0"

__all__ = [
    "AkpwParams",
    "Ball",
    "Decomposition",
    "DisconnectedSubgraphError",
    "EdgeClassedGraph",
    "EliminationRecord",
    "PartitionRetryError",
    "PreconditionerChain",
    "SddMatrix",
    "SolveOptions",
    "SparsifyParams",
    "SplitParams",
    "StretchSubgraph",
    "WeightedMultigraph",
    "akpw",
    "bfs_ball",
    "build_chain",
    "contract",
    "eliminate_solve",
    "greedy_elimination",
    "incremental_sparsify",
    "jittered_assignment",
    "laplacian",
    "level_solve",
    "ls_subgraph",
    "normalize_weights",
    "partition",
    "per_edge_stretch",
    "sdd_solve",
    "sdd_to_laplacian",
    "sparse_akpw",
    "split_graph",
    "total_stretch",
    "weight_classes",
    "well_space",
]
