"""Trust-network cold-start recommendation benchmark.

Builds user embeddings from a trust graph, recommends items to
cold-start users through similarity-weighted neighbor ratings, and
evaluates accuracy (nDCG), novelty (EPC), diversity (ILD), and user
coverage with paired significance tests.
"""

from .datasets import (
    RatingFormat,
    RatingsMatrix,
    SplitSpec,
    TrustFormat,
    TrustGraph,
    align_users,
    load_ratings,
    load_trust,
    restrict_to_users,
    split_users,
    to_undirected,
)
from .errors import (
    ConfigError,
    DataError,
    DataFormatError,
    InsufficientDataError,
    NumericalError,
    TrustcfError,
)
from .evaluation import (
    EvalRecord,
    ItemEmbeddingModel,
    epc_novelty,
    ild_diversity,
    ndcg_at_n,
    train_item_embeddings,
    user_coverage,
)
from .experiment import (
    ExperimentConfig,
    GridSpec,
    PreparedData,
    compare_methods,
    compute_embedding,
    correlate_metrics,
    emit_report,
    grid_search,
    prepare,
    reproduce,
    run_experiment,
)
from .recommend import (
    NeighborList,
    RecommendationList,
    knn_from_embedding,
    most_popular,
    neighbors_direct,
    neighbors_jaccard,
    neighbors_katz,
    neighbors_undirected,
    score_items,
)
from .stats import bonferroni, kendall_tau, wilcoxon_signed_rank

__version__ = "0.1.0"
