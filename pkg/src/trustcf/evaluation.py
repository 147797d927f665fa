"""Accuracy, novelty, diversity, and coverage of recommendation lists.

Relevance is binary: an item counts if the held-out user actually rated
it. Novelty is expected popularity complement over warm-side rating
counts; diversity is mean pairwise cosine distance between item vectors
trained from (item, rater) co-occurrences.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .datasets import RatingsMatrix
from .embeddings.base import EmbeddingMatrix
from .embeddings.sgns import SgnsConfig, train_pairs
from .errors import DataError
from .recommend import RecommendationList

__all__ = [
    "ndcg_at_n",
    "epc_novelty",
    "ItemEmbeddingModel",
    "train_item_embeddings",
    "ild_diversity",
    "EvalRecord",
    "user_coverage",
    "dump_records",
    "load_records",
]


def ndcg_at_n(items: np.ndarray, truth: np.ndarray, n: int = 10) -> float:
    """Binary-relevance nDCG: DCG normalized by the best achievable DCG
    given min(n, |truth|) relevant slots. Empty truth scores 0."""
    if isinstance(truth, (set, frozenset)):
        truth = np.fromiter(truth, dtype=np.int64, count=len(truth))
    truth = np.asarray(truth)
    if truth.size == 0:
        return 0.0
    top = np.asarray(items)[:n]
    if top.size == 0:
        return 0.0
    rel = np.isin(top, truth)
    positions = np.arange(1, top.size + 1)
    dcg = float((rel / np.log2(positions + 1)).sum())
    ideal = min(n, int(truth.size))
    idcg = float((1.0 / np.log2(np.arange(1, ideal + 1) + 1)).sum())
    return dcg / idcg


def epc_novelty(
    items: np.ndarray,
    item_pop: np.ndarray,
    num_users: int,
    n: int = 10,
    rank_discounted: bool = False,
) -> float:
    """Mean popularity complement 1 - pop_i/num_users over the top n.

    With ``rank_discounted`` each position is weighted by 1/log2(j+1)
    and the weights are normalized; the default weighs slots equally.
    """
    top = np.asarray(items)[:n]
    if top.size == 0:
        raise DataError("cannot score novelty of an empty recommendation list")
    if num_users <= 0:
        raise DataError(f"num_users must be positive, got {num_users}")
    nov = 1.0 - item_pop[top] / num_users
    if not rank_discounted:
        return float(nov.mean())
    disc = 1.0 / np.log2(np.arange(1, top.size + 1) + 1)
    return float((nov * disc).sum() / disc.sum())


@dataclass
class ItemEmbeddingModel:
    """Item vectors for diversity; rows of unrated items stay zero."""

    embedding: EmbeddingMatrix
    has_vector: np.ndarray  # bool per item

    @property
    def num_items(self) -> int:
        return self.embedding.num_nodes


def train_item_embeddings(
    ratings: RatingsMatrix, cfg: SgnsConfig | None = None
) -> ItemEmbeddingModel:
    """Fit item vectors that predict which users rated the item.

    Every (item, user) rating entry is one training pair: the item
    vector is the center, user-id tokens the contexts, negatives drawn
    from user frequency^0.75. Pass the warm-side ratings view so held
    out users never shape these vectors.
    """
    cfg = cfg or SgnsConfig(dim=64, epochs=5)
    users_per_entry = np.repeat(
        np.arange(ratings.num_users, dtype=np.int64), np.diff(ratings.user_ptr)
    )
    items_per_entry = ratings.item_idx.astype(np.int64)
    if items_per_entry.size == 0:
        raise DataError("ratings matrix has no entries to train item vectors on")
    user_counts = np.bincount(users_per_entry, minlength=ratings.num_users)
    syn0, _, losses = train_pairs(
        items_per_entry,
        users_per_entry,
        ratings.num_items,
        ratings.num_users,
        user_counts,
        cfg,
    )
    has_vector = np.bincount(items_per_entry, minlength=ratings.num_items) > 0
    values = syn0.copy()
    values[~has_vector] = 0.0
    emb = EmbeddingMatrix(
        np.ascontiguousarray(values),
        {"method": "item_sgns", "loss": losses, "seed": cfg.seed},
    )
    return ItemEmbeddingModel(emb, has_vector)


def ild_diversity(
    items: np.ndarray, model: ItemEmbeddingModel, n: int = 10
) -> float | None:
    """Mean pairwise (1 - cosine)/2 over recommended items with vectors.

    Items lacking a vector are skipped; fewer than two usable items
    leaves diversity undefined (None). Identical vectors give 0.
    """
    top = np.asarray(items)[:n]
    usable = top[model.has_vector[top]] if top.size else top
    if usable.size < 2:
        return None
    vecs = model.embedding.values[usable]
    norms = np.linalg.norm(vecs, axis=1)
    unit = vecs / norms[:, None]
    cos = unit @ unit.T
    iu = np.triu_indices(usable.size, k=1)
    dist = (1.0 - cos[iu]) / 2.0
    return float(np.clip(dist, 0.0, 1.0).mean())


@dataclass
class EvalRecord:
    """Per-user outcome; metric fields are None when not measurable."""

    user: int
    covered: bool
    ndcg: float | None = None
    novelty: float | None = None
    diversity: float | None = None


def user_coverage(records: list[EvalRecord]) -> float:
    """Fraction of evaluated users who received at least one item."""
    if not records:
        raise DataError("no evaluation records")
    return sum(1 for r in records if r.covered) / len(records)


def dump_records(records: list[EvalRecord], method: str, path) -> None:
    """CSV rows user,method,ndcg,novelty,diversity,covered."""

    def fmt(x):
        return "" if x is None else f"{x:.10g}"

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user", "method", "ndcg", "novelty", "diversity", "covered"])
        for r in records:
            writer.writerow(
                [r.user, method, fmt(r.ndcg), fmt(r.novelty), fmt(r.diversity), int(r.covered)]
            )


def load_records(path) -> tuple[str, list[EvalRecord]]:
    """Inverse of dump_records; returns (method, records)."""
    records = []
    method = ""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            method = row["method"]
            records.append(
                EvalRecord(
                    user=int(row["user"]),
                    covered=bool(int(row["covered"])),
                    ndcg=float(row["ndcg"]) if row["ndcg"] else None,
                    novelty=float(row["novelty"]) if row["novelty"] else None,
                    diversity=float(row["diversity"]) if row["diversity"] else None,
                )
            )
    return method, records
