"""End-to-end benchmark orchestration.

Pipeline per method: load ratings + trust, symmetrize, split users,
build an embedding (or trust baseline), pick k nearest neighbors,
score items by similarity-weighted neighbor ratings, and evaluate
nDCG/novelty/diversity/coverage per target user.

Hyperparameters are tuned in "validate" mode (warm users with trust
links as targets, warm-side ratings as the scoring source) so held-out
cold users never influence model selection; "test" mode targets every
cold user with at least one rating.
"""

from __future__ import annotations

import itertools
import json
import os
import resource
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .datasets import (
    RATING_PRESETS,
    TRUST_PRESETS,
    LoadReport,
    RatingsMatrix,
    SplitSpec,
    TrustGraph,
    align_users,
    load_ratings,
    load_trust,
    restrict_to_users,
    split_users,
    to_undirected,
)
from .embeddings import (
    AdamicAdar,
    CommonNeighbors,
    EmbeddingMatrix,
    Katz,
    RoleConfig,
    RootedPageRank,
    SgnsConfig,
    WalkConfig,
    deepwalk,
    graph_factorization,
    grarep,
    hope,
    import_embedding,
    laplacian_eigenmaps,
    line_embedding,
    locally_linear_embedding,
    node2vec,
    role2vec,
)
from .errors import ConfigError, DataError, TrustcfError
from .evaluation import (
    EvalRecord,
    ItemEmbeddingModel,
    dump_records,
    epc_novelty,
    ild_diversity,
    ndcg_at_n,
    train_item_embeddings,
    user_coverage,
)
from .recommend import (
    RecommendationList,
    knn_from_embedding,
    most_popular,
    neighbors_direct,
    neighbors_jaccard,
    neighbors_katz,
    neighbors_undirected,
    popularity_ranking,
    score_items,
)
from .stats import bonferroni, kendall_tau, wilcoxon_signed_rank

__all__ = [
    "ExperimentConfig",
    "GridSpec",
    "GridResult",
    "PreparedData",
    "prepare",
    "resolve_dataset_paths",
    "compute_embedding",
    "evaluate_method",
    "run_experiment",
    "grid_search",
    "compare_methods",
    "correlate_metrics",
    "emit_report",
    "reproduce",
    "METHOD_FAMILIES",
    "DEFAULT_GRIDS",
    "REPRODUCE_PRESETS",
    "DATA_ROOT_ENV",
]

DATA_ROOT_ENV = "TRUSTCF_DATA_ROOT"

METHOD_FAMILIES = {
    "mp": "baseline",
    "trust_dir": "baseline",
    "trust_undir": "baseline",
    "trust_jaccard": "baseline",
    "trust_katz": "baseline",
    "gf": "factorization",
    "le": "factorization",
    "lle": "factorization",
    "hope": "factorization",
    "grarep": "factorization",
    "deepwalk": "random_walk",
    "node2vec": "random_walk",
    "role2vec": "random_walk",
    "line": "line",
    "imported": "imported",
}

_FAMILY_ORDER = ["baseline", "factorization", "random_walk", "line", "imported"]

# legal hyperparameter keys per method, with coercions for config files
_PARAM_DOMAINS: dict[str, dict[str, type]] = {
    "mp": {},
    "trust_dir": {"direction": str},
    "trust_undir": {},
    "trust_jaccard": {},
    "trust_katz": {"alpha": float, "horizon": int},
    "gf": {"dim": int, "lr": float, "reg": float, "epochs": int},
    "le": {"dim": int},
    "lle": {"dim": int},
    "hope": {"dim": int, "proximity": str, "beta": float, "alpha": float},
    "grarep": {"dim": int, "max_order": int},
    "deepwalk": {
        "dim": int,
        "num_walks": int,
        "walk_length": int,
        "window": int,
        "negatives": int,
        "epochs": int,
        "lr": float,
    },
    "node2vec": {
        "dim": int,
        "num_walks": int,
        "walk_length": int,
        "window": int,
        "negatives": int,
        "epochs": int,
        "lr": float,
        "p": float,
        "q": float,
    },
    "role2vec": {
        "dim": int,
        "num_walks": int,
        "walk_length": int,
        "window": int,
        "negatives": int,
        "epochs": int,
        "lr": float,
        "feature_kind": str,
        "iterations": int,
        "num_clusters": int,
        "log_binning": bool,
    },
    "line": {"dim": int, "order": str, "samples": int, "negatives": int, "lr": float},
    "imported": {"path": str},
}

# grids reconstructed from the hyperparameter ranges reported in prose;
# not guaranteed identical to the original sweep
DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    "gf": {"lr": [0.1, 0.5, 1.0]},
    "le": {},
    "lle": {},
    "hope": {"proximity": ["katz", "cn", "rpr", "adamic_adar"]},
    "grarep": {"max_order": [1, 2, 3, 4]},
    "node2vec": {"q": [0.01, 0.5, 1.0, 2.0, 100.0], "walk_length": [20, 40, 80], "window": [3, 5, 8]},
    "deepwalk": {"walk_length": [5, 10, 20, 40, 80, 120, 160], "window": [1, 2, 3, 5, 8]},
    "role2vec": {
        "feature_kind": ["wl_degree", "motif3"],
        "walk_length": [20, 40, 80],
        "num_clusters": [25, 50, 75],
    },
    "line": {
        "order": ["first", "second"],
        "lr": [0.0001, 0.001, 0.005, 0.01, 0.025, 0.125],
        "negatives": [2, 3, 5, 8, 13, 21],
    },
}

# per-dataset configurations that won the original validation sweeps
REPRODUCE_PRESETS: dict[str, dict[str, dict]] = {
    "epinions": {
        "gf": {"lr": 0.1},
        "le": {},
        "lle": {},
        "hope": {"proximity": "katz", "beta": 0.01},
        "grarep": {"max_order": 1},
        "node2vec": {"p": 1.0, "q": 0.5, "walk_length": 80, "window": 8},
        "deepwalk": {"walk_length": 120, "window": 8},
        "role2vec": {"feature_kind": "wl_degree", "walk_length": 20, "num_clusters": 75, "window": 5},
        "line": {"order": "first", "lr": 0.025, "negatives": 13},
    },
    "ciao": {
        "gf": {"lr": 0.5},
        "le": {},
        "lle": {},
        "hope": {"proximity": "cn"},
        "grarep": {"max_order": 1},
        "node2vec": {"p": 1.0, "q": 2.0, "walk_length": 80, "window": 3},
        "deepwalk": {"walk_length": 10, "window": 8},
        "role2vec": {"feature_kind": "wl_degree", "walk_length": 40, "num_clusters": 75, "window": 5},
        "line": {"order": "first", "lr": 0.01, "negatives": 5},
    },
    "filmtrust": {
        "gf": {"lr": 1.0},
        "le": {},
        "lle": {},
        "hope": {"proximity": "rpr", "alpha": 0.85},
        "grarep": {"max_order": 4, "dim": 120},
        "node2vec": {"p": 1.0, "q": 100.0, "walk_length": 80, "window": 3},
        "deepwalk": {"walk_length": 160, "window": 2},
        "role2vec": {"feature_kind": "wl_degree", "walk_length": 80, "num_clusters": 25, "window": 5},
        "line": {"order": "second", "lr": 0.0001, "negatives": 8},
    },
}

_DATASET_FILES = {
    "epinions": (["ratings_data.txt", "ratings.txt"], ["trust_data.txt", "trust.txt"]),
    "ciao": (["movie-ratings.txt", "ratings.txt", "rating.txt"], ["trusts.txt", "trust.txt"]),
    "filmtrust": (["ratings.txt", "ratings.dat"], ["trust.txt", "trust.dat"]),
}


@dataclass
class ExperimentConfig:
    method: str = "mp"
    dataset: str | None = None
    ratings_path: str | None = None
    trust_path: str | None = None
    data_root: str | None = None
    params: dict = field(default_factory=dict)
    mode: str = "test"
    knn_k: int = 40
    top_n: int = 10
    threshold: int = 10
    trust_degree: str = "any"
    filter_rated: bool = True
    seed: int = 0

    def validate(self) -> None:
        if self.method not in METHOD_FAMILIES:
            raise ConfigError(
                f"unknown method {self.method!r}; known: {', '.join(sorted(METHOD_FAMILIES))}"
            )
        if self.mode not in ("validate", "test"):
            raise ConfigError(f"mode must be 'validate' or 'test', got {self.mode!r}")
        if self.knn_k < 1 or self.top_n < 1:
            raise ConfigError("k and n must be >= 1")
        domain = _PARAM_DOMAINS[self.method]
        for key in self.params:
            if key not in domain:
                raise ConfigError(
                    f"method {self.method!r} does not take parameter {key!r}; "
                    f"allowed: {', '.join(sorted(domain)) or '(none)'}"
                )


@dataclass(frozen=True)
class GridSpec:
    """Cartesian hyperparameter candidates; selection metric is fixed to
    mean validation nDCG over covered users."""

    candidates: dict[str, list]

    @property
    def size(self) -> int:
        n = 1
        for values in self.candidates.values():
            n *= len(values)
        return n

    def points(self):
        if not self.candidates:
            yield {}
            return
        keys = list(self.candidates)
        for values in itertools.product(*(self.candidates[k] for k in keys)):
            yield dict(zip(keys, values))

    def validate(self) -> None:
        for key, values in self.candidates.items():
            if not values:
                raise ConfigError(f"empty candidate list for {key!r}")


@dataclass
class PreparedData:
    name: str
    ratings: RatingsMatrix  # aligned to the graph's node universe
    graph_directed: TrustGraph
    graph: TrustGraph  # symmetrized
    split: SplitSpec
    warm_view: RatingsMatrix  # warm users' rows only, same shape
    rating_report: LoadReport
    trust_report: LoadReport
    _item_models: dict = field(default_factory=dict, repr=False)

    def item_model(self, seed: int = 0, dim: int = 64, epochs: int = 5) -> ItemEmbeddingModel:
        key = (seed, dim, epochs)
        if key not in self._item_models:
            self._item_models[key] = train_item_embeddings(
                self.warm_view, SgnsConfig(dim=dim, epochs=epochs, seed=seed)
            )
        return self._item_models[key]


def resolve_dataset_paths(
    dataset: str, data_root: str | None = None
) -> tuple[str, str]:
    """Locate ratings/trust files for a named dataset under the data root.

    The root comes from the argument, the TRUSTCF_DATA_ROOT environment
    variable, or ./data, in that order; files are searched in
    <root>/<dataset>/ and <root>/ under their customary names.
    """
    if dataset not in _DATASET_FILES:
        raise ConfigError(
            f"unknown dataset {dataset!r}; known: {', '.join(sorted(_DATASET_FILES))}"
        )
    root = data_root or os.environ.get(DATA_ROOT_ENV) or "data"
    rating_names, trust_names = _DATASET_FILES[dataset]
    tried = []

    def find(names):
        for base in (os.path.join(root, dataset), root):
            for name in names:
                path = os.path.join(base, name)
                if os.path.isfile(path):
                    return path
                tried.append(path)
        return None

    r = find(rating_names)
    t = find(trust_names)
    if r is None or t is None:
        raise DataError(
            f"dataset {dataset!r} not found under {root!r}; tried: " + ", ".join(tried)
        )
    return r, t


def prepare(
    dataset: str | None = None,
    ratings_path: str | None = None,
    trust_path: str | None = None,
    data_root: str | None = None,
    threshold: int = 10,
    trust_degree: str = "any",
) -> PreparedData:
    """Load, align, symmetrize, and split one dataset."""
    if dataset is None and (ratings_path is None or trust_path is None):
        raise ConfigError("give a dataset name or explicit --ratings/--trust paths")
    name = dataset or "custom"
    if ratings_path is None or trust_path is None:
        ratings_path, trust_path = resolve_dataset_paths(dataset, data_root)
    rfmt = RATING_PRESETS.get(name, RATING_PRESETS["epinions"])
    tfmt = TRUST_PRESETS.get(name, TRUST_PRESETS["epinions"])
    ratings, rating_report = load_ratings(ratings_path, rfmt)
    graph_d, trust_report = load_trust(trust_path, tfmt)
    ratings, graph_d = align_users(ratings, graph_d)
    graph = to_undirected(graph_d)
    split = split_users(ratings, graph_d, threshold=threshold, trust_degree=trust_degree)
    warm_view = restrict_to_users(ratings, split.warm_users)
    return PreparedData(
        name, ratings, graph_d, graph, split, warm_view, rating_report, trust_report
    )


def _sgns_cfg(params: dict, seed: int) -> SgnsConfig:
    return SgnsConfig(
        dim=int(params.get("dim", 128)),
        window=int(params.get("window", 5)),
        negatives=int(params.get("negatives", 5)),
        epochs=int(params.get("epochs", 5)),
        lr=float(params.get("lr", 0.025)),
        seed=seed,
    )


def _walk_cfg(params: dict, seed: int) -> WalkConfig:
    return WalkConfig(
        num_walks=int(params.get("num_walks", 10)),
        walk_length=int(params.get("walk_length", 80)),
        seed=seed,
    )


def compute_embedding(
    method: str, graph: TrustGraph, params: dict, seed: int = 0
) -> EmbeddingMatrix:
    """Dispatch to the registered embedding builder for ``method``."""
    if method == "gf":
        return graph_factorization(
            graph,
            dim=int(params.get("dim", 128)),
            lr=float(params.get("lr", 0.01)),
            reg=float(params.get("reg", 0.1)),
            epochs=int(params.get("epochs", 30)),
            seed=seed,
        )
    if method == "le":
        return laplacian_eigenmaps(graph, dim=int(params.get("dim", 128)), seed=seed)
    if method == "lle":
        return locally_linear_embedding(graph, dim=int(params.get("dim", 128)), seed=seed)
    if method == "hope":
        kind = str(params.get("proximity", "katz")).lower()
        if kind == "katz":
            prox = Katz(float(params.get("beta", 0.01)))
        elif kind == "rpr":
            prox = RootedPageRank(float(params.get("alpha", 0.5)))
        elif kind == "cn":
            prox = CommonNeighbors()
        elif kind in ("adamic_adar", "aa"):
            prox = AdamicAdar()
        else:
            raise ConfigError(f"unknown hope proximity {kind!r}")
        return hope(graph, dim=int(params.get("dim", 128)), proximity=prox, seed=seed)
    if method == "grarep":
        max_order = int(params.get("max_order", 1))
        default_dim = 120 if 128 % max_order else 128
        return grarep(
            graph, dim=int(params.get("dim", default_dim)), max_order=max_order, seed=seed
        )
    if method == "deepwalk":
        return deepwalk(graph, _walk_cfg(params, seed), _sgns_cfg(params, seed))
    if method == "node2vec":
        return node2vec(
            graph,
            p=float(params.get("p", 1.0)),
            q=float(params.get("q", 1.0)),
            walk_cfg=_walk_cfg(params, seed),
            sgns_cfg=_sgns_cfg(params, seed),
        )
    if method == "role2vec":
        role_cfg = RoleConfig(
            feature_kind=str(params.get("feature_kind", "wl_degree")),
            iterations=int(params.get("iterations", 2)),
            num_clusters=int(params.get("num_clusters", 50)),
            log_binning=bool(params.get("log_binning", True)),
        )
        return role2vec(graph, role_cfg, _walk_cfg(params, seed), _sgns_cfg(params, seed))
    if method == "line":
        return line_embedding(
            graph,
            dim=int(params.get("dim", 128)),
            order=str(params.get("order", "second")),
            samples=int(params["samples"]) if "samples" in params else None,
            negatives=int(params.get("negatives", 5)),
            lr=float(params.get("lr", 0.025)),
            seed=seed,
        )
    if method == "imported":
        path = params.get("path")
        if not path:
            raise ConfigError("imported method needs params.path pointing at an embedding file")
        return import_embedding(path, graph)
    raise ConfigError(f"method {method!r} has no embedding builder")


def _stage(stages: dict, name: str):
    class _Timer:
        def __enter__(self):
            self.t0 = time.perf_counter()
            return self

        def __exit__(self, exc_type, exc, tb):
            stages[name] = stages.get(name, 0.0) + time.perf_counter() - self.t0
            if exc is not None and isinstance(exc, TrustcfError):
                raise type(exc)(f"{name}: {exc}") from exc
            return False

    return _Timer()


def _mp_recommendations(
    warm_view: RatingsMatrix,
    targets: np.ndarray,
    top_n: int,
    exclude_items: dict[int, np.ndarray] | None,
) -> list[RecommendationList]:
    ranked = popularity_ranking(warm_view)
    pop = warm_view.item_pop
    rated_mask = pop > 0
    ranked = ranked[rated_mask[ranked]]  # never recommend an unrated item
    out = []
    for t in targets:
        t = int(t)
        items = ranked
        if exclude_items:
            banned = exclude_items.get(t)
            if banned is not None and len(banned):
                items = items[~np.isin(items, banned)]
        items = items[:top_n]
        out.append(RecommendationList(t, items, pop[items].astype(np.float64)))
    return out


def evaluate_method(
    prep: PreparedData,
    method: str,
    params: dict,
    mode: str = "test",
    knn_k: int = 40,
    top_n: int = 10,
    seed: int = 0,
    embedding: EmbeddingMatrix | None = None,
    item_model: ItemEmbeddingModel | None = None,
    filter_rated: bool = True,
    with_diversity: bool = True,
    stages: dict | None = None,
) -> list[EvalRecord]:
    """Run one method over the targets of ``mode`` and score every user.

    Test mode targets all cold users with ratings and scores against the
    full rating matrix; validate mode targets warm users with trust
    links and scores only from warm-side ratings, so model selection
    never sees held-out data.
    """
    stages = stages if stages is not None else {}
    if mode == "validate":
        targets = prep.split.validation_users
        source = prep.warm_view
    else:
        targets = prep.split.cold_users
        source = prep.ratings

    # the target's training-side items never reappear as recommendations;
    # cold targets have no training-side items, so this bites only when
    # warm users are scored in test mode
    exclude: dict[int, np.ndarray] | None = None
    if filter_rated and mode == "test":
        exclude = {}
        for t in targets:
            items, _ = prep.warm_view.user_items(int(t))
            if items.size:
                exclude[int(t)] = items

    if method == "mp":
        with _stage(stages, "score"):
            recs = _mp_recommendations(prep.warm_view, targets, top_n, exclude)
    else:
        if method in ("trust_dir", "trust_undir", "trust_jaccard", "trust_katz"):
            with _stage(stages, "neighbors"):
                if method == "trust_dir":
                    nls = neighbors_direct(
                        prep.graph_directed,
                        targets,
                        knn_k,
                        direction=str(params.get("direction", "out")),
                    )
                elif method == "trust_undir":
                    nls = neighbors_undirected(prep.graph, targets, knn_k)
                elif method == "trust_jaccard":
                    nls = neighbors_jaccard(prep.graph, targets, knn_k)
                else:
                    nls = neighbors_katz(
                        prep.graph,
                        targets,
                        knn_k,
                        alpha=float(params.get("alpha", 0.05)),
                        horizon=int(params.get("horizon", 6)),
                    )
        else:
            if embedding is None:
                with _stage(stages, "embed"):
                    embedding = compute_embedding(method, prep.graph, params, seed)
            if embedding.num_nodes != prep.graph.num_nodes:
                raise DataError(
                    f"embedding has {embedding.num_nodes} rows, graph has {prep.graph.num_nodes}"
                )
            with _stage(stages, "neighbors"):
                nls = knn_from_embedding(embedding.values, targets, knn_k)
        with _stage(stages, "score"):
            recs = score_items(nls, source, top_n, exclude_items=exclude)

    model = None
    if with_diversity:
        model = item_model if item_model is not None else prep.item_model()

    records = []
    with _stage(stages, "metrics"):
        pop = prep.warm_view.item_pop
        num_users = prep.ratings.num_users
        for rl in recs:
            t = rl.target
            uid = int(prep.graph.node_ids[t])
            truth, _ = prep.ratings.user_items(t)
            covered = len(rl) > 0
            if not covered:
                records.append(EvalRecord(uid, False))
                continue
            ndcg = ndcg_at_n(rl.items, truth, top_n)
            nov = epc_novelty(rl.items, pop, num_users, top_n)
            div = ild_diversity(rl.items, model, top_n) if model is not None else None
            records.append(EvalRecord(uid, True, ndcg, nov, div))
    return records


def _aggregate(records: list[EvalRecord]) -> dict:
    covered = [r for r in records if r.covered]
    div = [r.diversity for r in covered if r.diversity is not None]

    def mean(xs):
        return float(np.mean(xs)) if xs else None

    return {
        "ndcg": mean([r.ndcg for r in covered]),
        "novelty": mean([r.novelty for r in covered]),
        "diversity": mean(div),
        "coverage": user_coverage(records) if records else 0.0,
        "covered_users": len(covered),
        "total_users": len(records),
    }


def run_experiment(
    cfg: ExperimentConfig,
    prep: PreparedData | None = None,
    out_dir: str | None = None,
    embedding: EmbeddingMatrix | None = None,
    item_model: ItemEmbeddingModel | None = None,
) -> tuple[dict, list[EvalRecord]]:
    """Full pipeline for one method; returns (report row, per-user records).

    With ``out_dir`` the records CSV and the row JSON are persisted;
    on error partial files are removed and the failure carries its
    stage name.
    """
    cfg.validate()
    stages: dict[str, float] = {}
    t0 = time.perf_counter()
    if prep is None:
        with _stage(stages, "load"):
            prep = prepare(
                cfg.dataset,
                cfg.ratings_path,
                cfg.trust_path,
                cfg.data_root,
                threshold=cfg.threshold,
                trust_degree=cfg.trust_degree,
            )
    records = evaluate_method(
        prep,
        cfg.method,
        cfg.params,
        mode=cfg.mode,
        knn_k=cfg.knn_k,
        top_n=cfg.top_n,
        seed=cfg.seed,
        embedding=embedding,
        item_model=item_model,
        filter_rated=cfg.filter_rated,
        stages=stages,
    )
    row = {
        "method": cfg.method,
        "family": METHOD_FAMILIES[cfg.method],
        "params": dict(cfg.params),
        "dataset": prep.name,
        "mode": cfg.mode,
        "seed": cfg.seed,
        **_aggregate(records),
        "wall_time": time.perf_counter() - t0,
        "stage_seconds": {k: round(v, 6) for k, v in stages.items()},
        "peak_rss_mb": resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0,
        "flags": "",
    }
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        rec_path = os.path.join(out_dir, f"{cfg.method}.records.csv")
        row_path = os.path.join(out_dir, f"{cfg.method}.row.json")
        tmp_rec, tmp_row = rec_path + ".tmp", row_path + ".tmp"
        try:
            dump_records(records, cfg.method, tmp_rec)
            with open(tmp_row, "w", encoding="utf-8") as fh:
                json.dump(row, fh, indent=2)
            os.replace(tmp_rec, rec_path)
            os.replace(tmp_row, row_path)
        except BaseException:
            for tmp in (tmp_rec, tmp_row):
                if os.path.exists(tmp):
                    os.unlink(tmp)
            raise
    return row, records


@dataclass
class GridResult:
    best_params: dict | None
    best_score: float
    leaderboard: list[dict]

    @property
    def size(self) -> int:
        return len(self.leaderboard)


def grid_search(
    prep: PreparedData,
    method: str,
    grid: GridSpec | dict | None = None,
    base: ExperimentConfig | None = None,
    workers: int = 1,
) -> GridResult:
    """Evaluate every grid point on validation users, argmax mean nDCG.

    Failing points are recorded with their error and skipped; ties keep
    the earliest point in enumeration order. The reserved key "k"
    sweeps the neighbor count instead of a method hyperparameter.
    """
    base = base or ExperimentConfig(method=method, mode="validate")
    if base.mode != "validate":
        raise ConfigError("grid search must run in validate mode")
    if grid is None:
        grid = GridSpec(DEFAULT_GRIDS.get(method, {}))
    elif isinstance(grid, dict):
        grid = GridSpec(grid)
    grid.validate()

    points = list(grid.points())

    def run_point(point: dict) -> dict:
        params = {k: v for k, v in point.items() if k != "k"}
        knn_k = int(point.get("k", base.knn_k))
        merged = {**base.params, **params}
        cfg = replace(base, method=method, params=merged, knn_k=knn_k, mode="validate")
        cfg.validate()
        try:
            records = evaluate_method(
                prep,
                method,
                merged,
                mode="validate",
                knn_k=knn_k,
                top_n=base.top_n,
                seed=base.seed,
                filter_rated=base.filter_rated,
                with_diversity=False,
            )
        except TrustcfError as e:
            return {"params": dict(point), "error": str(e)}
        covered = [r.ndcg for r in records if r.covered]
        score = float(np.mean(covered)) if covered else 0.0
        return {"params": dict(point), "ndcg": score, "covered": len(covered)}

    if workers > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            leaderboard = list(pool.map(run_point, points))
    else:
        leaderboard = [run_point(p) for p in points]

    best_params, best_score = None, -1.0
    for entry in leaderboard:
        if "error" in entry:
            continue
        if entry["ndcg"] > best_score:
            best_params, best_score = entry["params"], entry["ndcg"]
    if best_params is None:
        raise DataError(f"every grid point failed for {method}")
    return GridResult(best_params, best_score, leaderboard)


def _records_by_user(records: list[EvalRecord]) -> dict[int, EvalRecord]:
    return {r.user: r for r in records}


def compare_methods(records_by_method: dict[str, list[EvalRecord]]) -> dict:
    """Pairwise signed-rank tests on per-user nDCG, Bonferroni adjusted.

    A method is flagged iff it beats every other method at adjusted
    p < 0.01 on the users both cover. Pairs without enough overlap are
    reported as insufficient and block the flag.
    """
    methods = list(records_by_method)
    if len(methods) < 2:
        raise DataError("need at least two methods to compare")
    universes = {m: set(_records_by_user(r)) for m, r in records_by_method.items()}
    first = universes[methods[0]]
    for m, uni in universes.items():
        if uni != first:
            raise DataError(f"user universe of {m} differs from {methods[0]}")

    by_user = {m: _records_by_user(r) for m, r in records_by_method.items()}
    pairs = list(itertools.combinations(methods, 2))
    m_comparisons = len(pairs)
    results = {}
    raw_ps = {}
    for a, b in pairs:
        users = sorted(
            u for u in first if by_user[a][u].covered and by_user[b][u].covered
        )
        xa = np.array([by_user[a][u].ndcg for u in users])
        xb = np.array([by_user[b][u].ndcg for u in users])
        res = wilcoxon_signed_rank(xa, xb) if users else None
        if res is None or not res.sufficient:
            results[(a, b)] = {
                "note": "insufficient data",
                "n": len(users),
                "n_effective": res.n_effective if res else 0,
            }
            continue
        diff = float(xa.mean() - xb.mean())
        results[(a, b)] = {
            "statistic": res.statistic,
            "p": res.p_value,
            "n": len(users),
            "n_effective": res.n_effective,
            "better": a if diff > 0 else (b if diff < 0 else None),
        }
        raw_ps[(a, b)] = res.p_value
    if raw_ps:
        adj = bonferroni(list(raw_ps.values()), m_comparisons)
        for (key, _), p_adj in zip(raw_ps.items(), adj):
            results[key]["p_adj"] = float(p_adj)

    flags = {}
    for m in methods:
        wins = True
        for other in methods:
            if other == m:
                continue
            key = (m, other) if (m, other) in results else (other, m)
            entry = results[key]
            if "p_adj" not in entry or entry["p_adj"] >= 0.01 or entry.get("better") != m:
                wins = False
                break
        flags[m] = wins
    return {
        "methods": methods,
        "pairs": results,
        "flags": flags,
        "m_comparisons": m_comparisons,
    }


_METRIC_PAIRS = (("ndcg", "novelty"), ("ndcg", "diversity"), ("diversity", "novelty"))


def correlate_metrics(
    records_by_method: dict[str, list[EvalRecord]],
    metric_pairs=_METRIC_PAIRS,
) -> dict:
    """Per-method Kendall tau between metric pairs on users where both
    values exist and are non-zero, plus the mean tau across methods."""
    if not records_by_method:
        raise DataError("no records to correlate")
    per_method: dict[str, dict] = {}
    tests = []
    for method, records in records_by_method.items():
        per_method[method] = {}
        for m1, m2 in metric_pairs:
            xs, ys = [], []
            for r in records:
                v1, v2 = getattr(r, m1), getattr(r, m2)
                if v1 is not None and v2 is not None and v1 != 0 and v2 != 0:
                    xs.append(v1)
                    ys.append(v2)
            name = f"{m1}~{m2}"
            if len(xs) < 2:
                per_method[method][name] = {"note": "too few non-zero pairs", "n": len(xs)}
                continue
            try:
                tau, p = kendall_tau(np.array(xs), np.array(ys))
            except DataError as e:
                per_method[method][name] = {"note": str(e), "n": len(xs)}
                continue
            per_method[method][name] = {"tau": tau, "p": p, "n": len(xs)}
            tests.append((method, name))
    if tests:
        m = len(tests)
        for method, name in tests:
            entry = per_method[method][name]
            entry["p_adj"] = float(bonferroni([entry["p"]], m)[0])
    mean_tau = {}
    for m1, m2 in metric_pairs:
        name = f"{m1}~{m2}"
        taus = [
            per_method[method][name]["tau"]
            for method in per_method
            if "tau" in per_method[method].get(name, {})
        ]
        mean_tau[name] = float(np.mean(taus)) if taus else None
    return {"per_method": per_method, "mean_tau": mean_tau}


def _fmt(x, digits=4) -> str:
    if x is None:
        return ""
    return f"{x:.{digits}f}"


def emit_report(rows: list[dict], fmt: str = "csv") -> str:
    """Render aggregate rows as csv, json, or a family-grouped markdown table."""
    if not rows:
        raise DataError("no rows to report")
    if fmt == "json":
        return json.dumps(rows, indent=2, sort_keys=True)
    header = ["method", "params", "ndcg", "novelty", "diversity", "coverage", "flags"]
    if fmt == "csv":
        lines = [",".join(header)]
        for row in rows:
            params = json.dumps(row.get("params", {}), sort_keys=True).replace('"', "'")
            lines.append(
                ",".join(
                    [
                        row["method"],
                        f'"{params}"',
                        _fmt(row.get("ndcg")),
                        _fmt(row.get("novelty")),
                        _fmt(row.get("diversity")),
                        _fmt(row.get("coverage")),
                        row.get("flags", ""),
                    ]
                )
            )
        return "\n".join(lines) + "\n"
    if fmt in ("markdown", "markdown-table", "md"):
        by_family: dict[str, list[dict]] = {}
        for row in rows:
            fam = row.get("family", METHOD_FAMILIES.get(row["method"], "imported"))
            by_family.setdefault(fam, []).append(row)
        lines = [
            "| Family | Method | Params | nDCG | Nov. | Div. | UC | flags |",
            "|---|---|---|---|---|---|---|---|",
        ]
        for fam in _FAMILY_ORDER:
            for row in by_family.get(fam, []):
                params = json.dumps(row.get("params", {}), sort_keys=True)
                cov = row.get("coverage")
                uc = f"{100.0 * cov:.1f}%" if cov is not None else ""
                lines.append(
                    "| "
                    + " | ".join(
                        [
                            fam,
                            row["method"],
                            f"`{params}`",
                            _fmt(row.get("ndcg")),
                            _fmt(row.get("novelty")),
                            _fmt(row.get("diversity")),
                            uc,
                            row.get("flags", ""),
                        ]
                    )
                    + " |"
                )
        return "\n".join(lines) + "\n"
    raise ConfigError(f"unknown report format {fmt!r}")


_REPRODUCE_BASELINES = ["mp", "trust_dir", "trust_undir", "trust_jaccard", "trust_katz"]
_REPRODUCE_EMBEDDINGS = ["gf", "le", "lle", "hope", "grarep", "deepwalk", "node2vec", "role2vec", "line"]


def reproduce(
    dataset: str,
    out_dir: str,
    methods: list[str] | None = None,
    data_root: str | None = None,
    seed: int = 0,
    knn_k: int = 40,
    top_n: int = 10,
) -> list[dict]:
    """Run the published per-dataset configurations end to end.

    Produces one row per method, pairwise significance flags, metric
    correlations, and report files (csv + markdown + json) in out_dir.
    """
    if dataset not in REPRODUCE_PRESETS:
        raise ConfigError(
            f"no presets for dataset {dataset!r}; known: {', '.join(sorted(REPRODUCE_PRESETS))}"
        )
    presets = REPRODUCE_PRESETS[dataset]
    if methods is None:
        methods = _REPRODUCE_BASELINES + _REPRODUCE_EMBEDDINGS
    for m in methods:
        if m not in METHOD_FAMILIES:
            raise ConfigError(f"unknown method {m!r}")
    prep = prepare(dataset, data_root=data_root)
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    records_by_method: dict[str, list[EvalRecord]] = {}
    for method in methods:
        params = dict(presets.get(method, {}))
        cfg = ExperimentConfig(
            method=method,
            dataset=dataset,
            params=params,
            mode="test",
            knn_k=knn_k,
            top_n=top_n,
            seed=seed,
        )
        row, records = run_experiment(cfg, prep=prep, out_dir=out_dir)
        rows.append(row)
        records_by_method[method] = records
    if len(records_by_method) >= 2:
        comparison = compare_methods(records_by_method)
        for row in rows:
            if comparison["flags"].get(row["method"]):
                row["flags"] = "*"
        with open(os.path.join(out_dir, "significance.json"), "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "flags": comparison["flags"],
                    "m_comparisons": comparison["m_comparisons"],
                    "pairs": {f"{a}|{b}": v for (a, b), v in comparison["pairs"].items()},
                },
                fh,
                indent=2,
            )
    correlations = correlate_metrics(records_by_method)
    with open(os.path.join(out_dir, "correlations.json"), "w", encoding="utf-8") as fh:
        json.dump(correlations, fh, indent=2)
    for fmt, fname in (("csv", "report.csv"), ("markdown", "report.md"), ("json", "report.json")):
        with open(os.path.join(out_dir, fname), "w", encoding="utf-8") as fh:
            fh.write(emit_report(rows, fmt))
    return rows
