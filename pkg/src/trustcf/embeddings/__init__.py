"""Graph embedding methods over the shared EmbeddingMatrix container."""

from .base import (
    EmbeddingMatrix,
    export_embedding,
    import_embedding,
    write_meta_sidecar,
    zero_isolated_rows,
)
from .factor import (
    AdamicAdar,
    CommonNeighbors,
    Katz,
    RootedPageRank,
    graph_factorization,
    grarep,
    hope,
    laplacian_eigenmaps,
    locally_linear_embedding,
)
from .methods import deepwalk, line_embedding, node2vec, role2vec
from .sgns import SgnsConfig, train_pairs, train_sgns
from .walks import RoleConfig, WalkConfig, WalkCorpus, assign_roles, generate_walks

__all__ = [
    "EmbeddingMatrix",
    "export_embedding",
    "import_embedding",
    "write_meta_sidecar",
    "zero_isolated_rows",
    "Katz",
    "RootedPageRank",
    "CommonNeighbors",
    "AdamicAdar",
    "graph_factorization",
    "laplacian_eigenmaps",
    "locally_linear_embedding",
    "hope",
    "grarep",
    "deepwalk",
    "node2vec",
    "role2vec",
    "line_embedding",
    "SgnsConfig",
    "train_sgns",
    "train_pairs",
    "WalkConfig",
    "WalkCorpus",
    "RoleConfig",
    "generate_walks",
    "assign_roles",
]
