"""
Paired comparison tests over fold x seed results.
"""

import logging
import math
from dataclasses import asdict, dataclass
from logging import Logger
from typing import Optional, Sequence

import numpy as np
from scipy.stats import norm, rankdata
from scipy.stats import t as student_t

from metatune.errors import DegenerateTestError, InvalidInputError

log: Logger = logging.getLogger(__name__)

EXACT_MAX_N: int = 20
"""Largest non-zero pair count for which Wilcoxon p-values are exact"""


@dataclass
class ComparisonResult:
    statistic: float
    p_value: float
    test_kind: str
    n_pairs: int
    dropped_zero_pairs: int = 0
    degenerate: bool = False
    w_plus: Optional[float] = None
    w_minus: Optional[float] = None
    exact: Optional[bool] = None

    def to_dict(self) -> dict:
        return asdict(self)


def _differences(a: Sequence[float], b: Sequence[float], min_len: int) -> np.ndarray:
    x: np.ndarray = np.asarray(a, dtype=float)
    y: np.ndarray = np.asarray(b, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidInputError(f"Paired samples must have equal lengths ({len(x)} vs {len(y)})")
    if len(x) < min_len:
        raise InvalidInputError(f"At least {min_len} pairs are needed")
    return x - y


def _exact_lower_tail(doubled_ranks: np.ndarray, doubled_w: int) -> float:
    """P(W+ <= w) under the null, counting all 2^n sign patterns by convolution"""
    total: int = int(doubled_ranks.sum())
    counts: np.ndarray = np.zeros(total + 1, dtype=float)
    counts[0] = 1.0
    for r in doubled_ranks:
        shifted: np.ndarray = np.zeros_like(counts)
        shifted[r:] = counts[:len(counts) - r]
        counts = counts + shifted
    return float(counts[:doubled_w + 1].sum() / 2.0 ** len(doubled_ranks))


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float], exact_max_n: int = EXACT_MAX_N) -> ComparisonResult:
    """Two-sided Wilcoxon signed-rank test of a against b

    Zero differences are dropped. Up to `exact_max_n` remaining pairs the p-value is
    exact, beyond it the normal approximation with tie-corrected variance and continuity
    correction is used. When every difference is zero the result is flagged degenerate
    with p = 1.

    Raises:
        InvalidInputError: on unequal or empty samples
    """
    d: np.ndarray = _differences(a, b, 1)
    nonzero: np.ndarray = d[d != 0]
    dropped: int = len(d) - len(nonzero)
    n: int = len(nonzero)
    if n == 0:
        log.warning("Wilcoxon: every paired difference is zero")
        return ComparisonResult(
            statistic=0.0, p_value=1.0, test_kind="wilcoxon", n_pairs=len(d),
            dropped_zero_pairs=dropped, degenerate=True, w_plus=0.0, w_minus=0.0,
        )

    ranks: np.ndarray = rankdata(np.abs(nonzero))
    w_plus: float = float(ranks[nonzero > 0].sum())
    w_minus: float = float(ranks[nonzero < 0].sum())
    w: float = min(w_plus, w_minus)

    if n <= exact_max_n:
        # Average ranks are multiples of 1/2
        doubled: np.ndarray = np.rint(2 * ranks).astype(int)
        p: float = 2.0 * _exact_lower_tail(doubled, int(round(2 * w)))
        exact: bool = True
    else:
        _, tie_counts = np.unique(ranks, return_counts=True)
        mean: float = n * (n + 1) / 4
        var: float = n * (n + 1) * (2 * n + 1) / 24 - float(np.sum(tie_counts ** 3 - tie_counts)) / 48
        z: float = min(0.0, (w - mean + 0.5) / math.sqrt(var))
        p = 2.0 * float(norm.cdf(z))
        exact = False

    return ComparisonResult(
        statistic=w, p_value=min(1.0, p), test_kind="wilcoxon", n_pairs=len(d),
        dropped_zero_pairs=dropped, w_plus=w_plus, w_minus=w_minus, exact=exact,
    )


def paired_t(a: Sequence[float], b: Sequence[float]) -> ComparisonResult:
    """Two-sided paired t-test with n - 1 degrees of freedom

    Raises:
        InvalidInputError: on unequal samples or fewer than 2 pairs
        DegenerateTestError: if the differences have zero variance
    """
    d: np.ndarray = _differences(a, b, 2)
    n: int = len(d)
    sd: float = float(d.std(ddof=1))
    if sd == 0:
        raise DegenerateTestError("Paired differences have zero variance")
    t: float = float(d.mean()) / (sd / math.sqrt(n))
    p: float = 2.0 * float(student_t.sf(abs(t), n - 1))
    return ComparisonResult(statistic=t, p_value=min(1.0, p), test_kind="paired_t", n_pairs=n)
