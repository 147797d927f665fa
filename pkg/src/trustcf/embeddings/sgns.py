"""Skip-gram with negative sampling over walk corpora and rating pairs.

One gradient convention serves both trainers: maximize
log sigmoid(y_c . z_x) + sum_q log sigmoid(-y_c . z_q) per observed
(center, context) pair with Q noise contexts drawn from a unigram^0.75
alias table. The corpus trainer slides a symmetric window over walks;
the pair trainer consumes explicit (center, context) arrays, which is
how item vectors are fit from (item, rater) co-occurrences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import ConfigError, DataError, NumericalError
from .base import EmbeddingMatrix
from .rng import _alias_draw, _mix64, build_alias
from .walks import WalkCorpus

__all__ = [
    "SgnsConfig",
    "train_sgns",
    "train_pairs",
    "log_sigmoid",
    "sgns_pair_objective",
    "sgns_pair_gradients",
]

_LR_FLOOR_FRACTION = 1e-4
_CLIP = 30.0


@dataclass(frozen=True)
class SgnsConfig:
    dim: int = 128
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    noise_power: float = 0.75
    seed: int = 0

    def validate(self) -> None:
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.window < 1:
            raise ConfigError(f"window must be >= 1, got {self.window}")
        if self.negatives < 0:
            raise ConfigError(f"negatives must be >= 0, got {self.negatives}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")


def log_sigmoid(x: np.ndarray | float) -> np.ndarray | float:
    """Numerically stable log(sigmoid(x))."""
    x = np.asarray(x, dtype=np.float64)
    out = np.where(x > 0, -np.log1p(np.exp(-np.abs(x))), x - np.log1p(np.exp(-np.abs(x))))
    return out if out.ndim else float(out)


def sgns_pair_objective(y_c: np.ndarray, z_x: np.ndarray, z_negs: np.ndarray) -> float:
    """Negative log likelihood of one pair plus its noise draws."""
    val = -log_sigmoid(float(y_c @ z_x))
    if z_negs.size:
        val -= log_sigmoid(-(z_negs @ y_c)).sum()
    return float(val)


def sgns_pair_gradients(
    y_c: np.ndarray, z_x: np.ndarray, z_negs: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients of sgns_pair_objective wrt each vector."""
    sig = 1.0 / (1.0 + math.exp(-float(y_c @ z_x)))
    g_yc = -(1.0 - sig) * z_x
    g_zx = -(1.0 - sig) * y_c
    g_negs = np.zeros_like(z_negs)
    for q in range(z_negs.shape[0]):
        sq = 1.0 / (1.0 + math.exp(-float(y_c @ z_negs[q])))
        g_yc = g_yc + sq * z_negs[q]
        g_negs[q] = sq * y_c
    return g_yc, g_zx, g_negs


@njit(cache=True, inline="always")
def _dot(a, b, i, j, dim):
    s = 0.0
    for k in range(dim):
        s += a[i, k] * b[j, k]
    return s


@njit(cache=True, inline="always")
def _train_one(syn0, syn1, c, x, lr, negatives, prob, alias, state, neu, dim):
    loss = 0.0
    for k in range(dim):
        neu[k] = 0.0
    dot = _dot(syn0, syn1, c, x, dim)
    if dot > _CLIP:
        f = 1.0
        loss += math.log1p(math.exp(-dot))
    elif dot < -_CLIP:
        f = 0.0
        loss += -dot
    else:
        f = 1.0 / (1.0 + math.exp(-dot))
        loss += -math.log(f) if f > 0.0 else _CLIP
    g = (1.0 - f) * lr
    for k in range(dim):
        neu[k] += g * syn1[x, k]
        syn1[x, k] += g * syn0[c, k]
    for _ in range(negatives):
        state, neg = _alias_draw(state, prob, alias)
        if neg == x:
            continue
        dot = _dot(syn0, syn1, c, neg, dim)
        if dot > _CLIP:
            f = 1.0
            loss += dot
        elif dot < -_CLIP:
            f = 0.0
            loss += math.log1p(math.exp(dot))
        else:
            f = 1.0 / (1.0 + math.exp(-dot))
            loss += -math.log(1.0 - f) if f < 1.0 else _CLIP
        g = (0.0 - f) * lr
        for k in range(dim):
            neu[k] += g * syn1[neg, k]
            syn1[neg, k] += g * syn0[c, k]
    for k in range(dim):
        syn0[c, k] += neu[k]
    return state, loss


@njit(cache=True)
def _corpus_epoch(
    walks,
    lengths,
    roles,
    use_roles,
    syn0,
    syn1,
    window,
    negatives,
    prob,
    alias,
    lr0,
    lr_floor,
    total_pairs,
    pairs_done,
    state,
):
    dim = syn0.shape[1]
    neu = np.empty(dim, dtype=np.float64)
    loss = 0.0
    count = 0
    for w in range(walks.shape[0]):
        n = lengths[w]
        for i in range(n):
            c = walks[w, i]
            if use_roles:
                c = roles[c]
            jlo = i - window
            if jlo < 0:
                jlo = 0
            jhi = i + window
            if jhi > n - 1:
                jhi = n - 1
            for j in range(jlo, jhi + 1):
                if j == i:
                    continue
                x = walks[w, j]
                if use_roles:
                    x = roles[x]
                lr = lr0 * (1.0 - pairs_done / total_pairs)
                if lr < lr_floor:
                    lr = lr_floor
                state, l = _train_one(
                    syn0, syn1, c, x, lr, negatives, prob, alias, state, neu, dim
                )
                loss += l
                count += 1
                pairs_done += 1
    return loss, count, pairs_done, state


@njit(cache=True)
def _pairs_epoch(
    centers,
    contexts,
    order,
    syn0,
    syn1,
    negatives,
    prob,
    alias,
    lr0,
    lr_floor,
    total_pairs,
    pairs_done,
    state,
):
    dim = syn0.shape[1]
    neu = np.empty(dim, dtype=np.float64)
    loss = 0.0
    count = 0
    for t in range(order.shape[0]):
        e = order[t]
        lr = lr0 * (1.0 - pairs_done / total_pairs)
        if lr < lr_floor:
            lr = lr_floor
        state, l = _train_one(
            syn0, syn1, centers[e], contexts[e], lr, negatives, prob, alias, state, neu, dim
        )
        loss += l
        count += 1
        pairs_done += 1
    return loss, count, pairs_done, state


def _noise_table(counts: np.ndarray, power: float) -> tuple[np.ndarray, np.ndarray]:
    weights = counts.astype(np.float64) ** power
    weights[counts == 0] = 0.0
    return build_alias(weights)


def _window_pair_total(lengths: np.ndarray, window: int) -> int:
    total = 0
    for n, mult in zip(*np.unique(lengths, return_counts=True)):
        n = int(n)
        i = np.arange(n)
        total += int(mult) * int(
            (np.minimum(i, window) + np.minimum(n - 1 - i, window)).sum()
        )
    return total


def train_sgns(
    corpus: WalkCorpus, cfg: SgnsConfig, roles: np.ndarray | None = None
) -> EmbeddingMatrix:
    """Fit node (or role) vectors from a walk corpus.

    With ``roles`` given, tokens are role ids and every node inherits its
    role's trained vector. Nodes (or roles) absent from the corpus get
    the zero vector so downstream coverage accounting stays exact.
    """
    cfg.validate()
    node_counts = corpus.vocabulary()
    if node_counts.sum() == 0:
        raise DataError("walk corpus is empty, nothing to train on")
    use_roles = roles is not None
    if use_roles:
        if roles.shape[0] != corpus.num_nodes:
            raise ConfigError("role array length does not match node count")
        vocab = int(roles.max()) + 1
        token_counts = np.bincount(roles, weights=node_counts, minlength=vocab)
        token_counts = token_counts.astype(np.int64)
    else:
        vocab = corpus.num_nodes
        token_counts = node_counts
    prob, alias = _noise_table(token_counts, cfg.noise_power)

    rng = np.random.default_rng(cfg.seed)
    syn0 = (rng.random((vocab, cfg.dim)) - 0.5) / cfg.dim
    syn1 = np.zeros((vocab, cfg.dim), dtype=np.float64)

    total_pairs = max(_window_pair_total(corpus.lengths, cfg.window) * cfg.epochs, 1)
    lr_floor = cfg.lr * _LR_FLOOR_FRACTION
    role_arr = roles.astype(np.int64) if use_roles else np.zeros(1, dtype=np.int64)

    losses = []
    done = 0
    for epoch in range(cfg.epochs):
        state = np.uint64(_mix64(np.uint64(cfg.seed) + np.uint64(epoch + 1)))
        loss, count, done, _ = _corpus_epoch(
            corpus.walks,
            corpus.lengths,
            role_arr,
            use_roles,
            syn0,
            syn1,
            cfg.window,
            cfg.negatives,
            prob,
            alias,
            cfg.lr,
            lr_floor,
            float(total_pairs),
            float(done),
            state,
        )
        mean = loss / count if count else 0.0
        if not np.isfinite(mean):
            raise NumericalError(f"sgns loss became non-finite in epoch {epoch}")
        losses.append(mean)

    if use_roles:
        values = syn0[roles]
        values[token_counts[roles] == 0] = 0.0
    else:
        values = syn0.copy()
        values[token_counts == 0] = 0.0
    meta = {
        "loss": losses,
        "vocab_size": vocab,
        "params": {
            "dim": cfg.dim,
            "window": cfg.window,
            "negatives": cfg.negatives,
            "epochs": cfg.epochs,
            "lr": cfg.lr,
        },
        "seed": cfg.seed,
    }
    return EmbeddingMatrix(np.ascontiguousarray(values), meta)


def train_pairs(
    centers: np.ndarray,
    contexts: np.ndarray,
    center_vocab: int,
    context_vocab: int,
    context_counts: np.ndarray,
    cfg: SgnsConfig,
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """SGD over explicit (center, context) pairs.

    Returns (center vectors, context vectors, per-epoch mean loss). Pair
    order is reshuffled each epoch from the config seed.
    """
    cfg.validate()
    centers = np.ascontiguousarray(centers, dtype=np.int64)
    contexts = np.ascontiguousarray(contexts, dtype=np.int64)
    if centers.shape != contexts.shape or centers.ndim != 1:
        raise ConfigError("centers and contexts must be 1-D arrays of equal length")
    if centers.size == 0:
        raise DataError("no training pairs")
    prob, alias = _noise_table(np.asarray(context_counts, dtype=np.int64), cfg.noise_power)

    rng = np.random.default_rng(cfg.seed)
    syn0 = (rng.random((center_vocab, cfg.dim)) - 0.5) / cfg.dim
    syn1 = np.zeros((context_vocab, cfg.dim), dtype=np.float64)

    total = max(centers.size * cfg.epochs, 1)
    lr_floor = cfg.lr * _LR_FLOOR_FRACTION
    losses: list[float] = []
    done = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(centers.size).astype(np.int64)
        state = np.uint64(_mix64(np.uint64(cfg.seed) + np.uint64(epoch + 1)))
        loss, count, done, _ = _pairs_epoch(
            centers,
            contexts,
            order,
            syn0,
            syn1,
            cfg.negatives,
            prob,
            alias,
            cfg.lr,
            lr_floor,
            float(total),
            float(done),
            state,
        )
        mean = loss / count if count else 0.0
        if not np.isfinite(mean):
            raise NumericalError(f"sgns loss became non-finite in epoch {epoch}")
        losses.append(mean)
    return syn0, syn1, losses
