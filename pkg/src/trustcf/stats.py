"""Paired significance tests and rank correlation for metric tables.

The signed-rank test is implemented here rather than wrapped: the exact
null distribution is enumerated for up to 25 effective pairs (doubled
midranks keep subset sums integral), with a tie-corrected normal
approximation above that. Fewer than five effective pairs is reported
as insufficient rather than given a meaningless p-value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr
from scipy.stats import kendalltau, rankdata

from .errors import DataError

__all__ = ["WilcoxonResult", "wilcoxon_signed_rank", "bonferroni", "kendall_tau"]

_EXACT_LIMIT = 25
_MIN_PAIRS = 5


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float | None
    p_value: float | None
    n_effective: int
    method: str  # "exact" | "normal" | "insufficient"

    @property
    def sufficient(self) -> bool:
        return self.p_value is not None


def _exact_p(doubled_ranks: np.ndarray, w_doubled: int) -> float:
    # subset-sum counts of 2*W+ via polynomial multiplication
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for dr in doubled_ranks:
        dr = int(dr)
        counts[dr:] = counts[dr:] + counts[:-dr]
    cdf = counts[: w_doubled + 1].sum() / counts.sum()
    return min(1.0, 2.0 * cdf)


def wilcoxon_signed_rank(a: np.ndarray, b: np.ndarray) -> WilcoxonResult:
    """Two-sided paired signed-rank test of a vs b.

    Zero differences are dropped. Ties among |differences| receive
    midranks; the exact path enumerates the null distribution, the
    normal path subtracts the tie term sum(t^3 - t)/48 from the
    variance. The statistic is min(W+, W-).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DataError("paired samples must be 1-D arrays of equal length")
    d = a - b
    d = d[d != 0]
    m = d.size
    if m < _MIN_PAIRS:
        return WilcoxonResult(None, None, m, "insufficient")

    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    w = min(w_plus, w_minus)

    if m <= _EXACT_LIMIT:
        doubled = np.rint(2.0 * ranks).astype(np.int64)
        p = _exact_p(doubled, int(round(2.0 * w)))
        return WilcoxonResult(w, p, m, "exact")

    mean = m * (m + 1) / 4.0
    var = m * (m + 1) * (2 * m + 1) / 24.0
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    var -= float((tie_counts.astype(np.float64) ** 3 - tie_counts).sum()) / 48.0
    if var <= 0:
        # every |d| identical and ties ate the variance; treat as degenerate
        return WilcoxonResult(w, 1.0 if w_plus == w_minus else 0.0, m, "normal")
    z = (w - mean) / math.sqrt(var)
    p = min(1.0, 2.0 * float(ndtr(z)))
    return WilcoxonResult(w, p, m, "normal")


def bonferroni(p_values: np.ndarray | list[float], m: int) -> np.ndarray:
    """Family-wise correction: min(1, p * m) per value."""
    if m < 1:
        raise DataError(f"number of comparisons must be >= 1, got {m}")
    p = np.asarray(p_values, dtype=np.float64)
    return np.minimum(1.0, p * m)


def kendall_tau(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Tie-adjusted rank correlation (tau-b) with asymptotic p-value."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError("samples must be 1-D arrays of equal length")
    if x.size < 3:
        # the asymptotic variance divides by (n - 2)
        raise DataError("need at least three observations for rank correlation")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise DataError("constant input has no defined rank correlation")
    tau, p = kendalltau(x, y, variant="b", method="asymptotic")
    if not np.isfinite(tau):
        raise DataError("rank correlation undefined for this input")
    return float(tau), float(p)
