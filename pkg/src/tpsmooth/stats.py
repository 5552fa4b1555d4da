"""Paired Wilcoxon signed-rank test with an exact small-sample branch.

Zero differences are dropped (classic Wilcoxon convention) and tied
absolute differences receive average ranks. For n <= EXACT_LIMIT the
two-sided p-value is exact over all 2^n sign assignments (computed by
convolving the rank distribution, which enumerates the same space);
beyond that a normal approximation with tie and continuity corrections
is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import InvalidInputError, UndefinedTestError

EXACT_LIMIT = 25


@dataclass(frozen=True)
class PairedSample:
    baseline: tuple[float, ...]
    enhanced: tuple[float, ...]

    def __post_init__(self):
        if len(self.baseline) != len(self.enhanced) or len(self.baseline) < 1:
            raise InvalidInputError("paired sample needs equal nonempty series")

    def differences(self) -> np.ndarray:
        return np.asarray(self.enhanced, dtype=np.float64) - np.asarray(self.baseline, dtype=np.float64)


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # W = min(W+, W-)
    p_value: float
    n_effective: int
    exact: bool


def _signed_rank_sums(diffs: np.ndarray) -> tuple[float, float, np.ndarray]:
    ranks = rankdata(np.abs(diffs))  # average ranks for ties
    w_plus = float(ranks[diffs > 0].sum())
    w_minus = float(ranks[diffs < 0].sum())
    return w_plus, w_minus, ranks


def _exact_two_sided_p(ranks: np.ndarray, w_obs: float) -> float:
    # Doubling the (possibly half-integer) average ranks makes them integers,
    # so the null distribution of 2*W+ is a convolution over {0, 2r} terms.
    ranks2 = np.rint(2.0 * ranks).astype(np.int64)
    total2 = int(ranks2.sum())
    counts = np.zeros(total2 + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in ranks2:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total2 + 1 - r]
        counts += shifted
    w2 = int(math.floor(2.0 * w_obs + 1e-9))
    cdf = counts[: w2 + 1].sum() / counts.sum()
    return min(1.0, 2.0 * cdf)


def _approx_two_sided_p(ranks: np.ndarray, w_obs: float) -> float:
    n = ranks.size
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    # Tie correction: subtract (t^3 - t)/48 per group of tied |d|.
    _, tie_counts = np.unique(ranks, return_counts=True)
    var -= float(((tie_counts**3 - tie_counts) / 48.0).sum())
    if var <= 0.0:
        raise UndefinedTestError("degenerate rank variance", n_effective=n)
    z = (w_obs - mean + 0.5) / math.sqrt(var)  # continuity correction toward the center
    return min(1.0, math.erfc(-z / math.sqrt(2.0)))


def wilcoxon_signed_rank(sample: PairedSample) -> WilcoxonResult:
    """Two-sided paired Wilcoxon signed-rank test.

    Raises :class:`UndefinedTestError` when every paired difference is
    zero (the test statistic is undefined; n_effective = 0).
    """
    diffs = sample.differences()
    if not np.isfinite(diffs).all():
        raise InvalidInputError("paired differences must be finite")
    diffs = diffs[diffs != 0.0]
    n = int(diffs.size)
    if n == 0:
        raise UndefinedTestError("all paired differences are zero", n_effective=0)

    w_plus, w_minus, ranks = _signed_rank_sums(diffs)
    w_obs = min(w_plus, w_minus)
    if n <= EXACT_LIMIT:
        p = _exact_two_sided_p(ranks, w_obs)
        return WilcoxonResult(w_obs, p, n, exact=True)
    p = _approx_two_sided_p(ranks, w_obs)
    return WilcoxonResult(w_obs, p, n, exact=False)
