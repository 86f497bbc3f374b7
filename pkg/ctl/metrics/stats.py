"""Exact binomial confidence intervals and the Wilcoxon signed-rank test."""
import logging
from dataclasses import asdict, dataclass
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy import stats

from ..const import DEFAULT_CONFIDENCE, WILCOXON_EXACT_LIMIT, WILCOXON_MIN_PAIRS
from ..error_handler import StatisticsError

_LOGGER = logging.getLogger(__name__)

METHOD_EXACT = "exact"
METHOD_NORMAL = "normal"


def clopper_pearson(successes: int, trials: int,
                    confidence: float = DEFAULT_CONFIDENCE) -> Tuple[float, float]:
    """Exact interval from Beta quantiles; 0 and 1 at the boundaries."""
    if int(successes) != successes or int(trials) != trials:
        raise StatisticsError("Successes and trials must be integers")
    if trials < 1 or not 0 <= successes <= trials:
        raise StatisticsError(f"Need 0 <= x <= n and n >= 1, got x={successes}, n={trials}")
    if not 0.0 < confidence < 1.0:
        raise StatisticsError(f"Confidence must lie in (0, 1), got {confidence}")
    alpha = 1.0 - confidence
    x, n = int(successes), int(trials)
    lower = 0.0 if x == 0 else float(stats.beta.ppf(alpha / 2, x, n - x + 1))
    upper = 1.0 if x == n else float(stats.beta.ppf(1 - alpha / 2, x + 1, n - x))
    return lower, upper


@dataclass(frozen=True)
class WilcoxonResult:
    """W is the smaller of the positive and negative rank sums."""
    statistic: float
    p_value: float
    n: int
    method: str
    w_plus: float
    w_minus: float

    def to_dict(self) -> Dict:
        return asdict(self)


def _exact_p(doubled_ranks: np.ndarray, doubled_w: int) -> float:
    # counts[s] = number of sign assignments whose doubled positive-rank sum is s
    counts = np.zeros(int(doubled_ranks.sum()) + 1, dtype=np.int64)
    counts[0] = 1
    for rank in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[rank:] = counts[:len(counts) - rank]
        counts = counts + shifted
    tail = int(counts[:doubled_w + 1].sum())
    return min(1.0, 2.0 * tail / 2 ** len(doubled_ranks))


def _normal_p(ranks: np.ndarray, w: float) -> float:
    n = len(ranks)
    _, ties = np.unique(ranks, return_counts=True)
    mean = n * (n + 1) / 4.0
    variance = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(ties ** 3 - ties)) / 48.0
    if variance <= 0:
        return 1.0
    z = (w - mean) / np.sqrt(variance)
    return min(1.0, 2.0 * float(stats.norm.cdf(z)))


def wilcoxon_signed_rank(differences: Sequence[float]) -> WilcoxonResult:
    """Two-sided signed-rank test of paired differences.

    Zero differences are dropped and tied magnitudes share their average rank. Up to
    the exact limit the null distribution is enumerated over all sign assignments;
    larger samples use the tie-corrected normal approximation.
    """
    d = np.asarray(differences, dtype=np.float64).ravel()
    if d.size == 0 or not np.all(np.isfinite(d)):
        raise StatisticsError("Differences must be a non-empty list of finite numbers")
    d = d[d != 0.0]
    if d.size == 0:
        raise StatisticsError("All paired differences are zero")
    if d.size < WILCOXON_MIN_PAIRS:
        raise StatisticsError(
            f"Need at least {WILCOXON_MIN_PAIRS} non-zero differences, got {d.size}"
        )
    ranks = stats.rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    w = min(w_plus, w_minus)
    if d.size <= WILCOXON_EXACT_LIMIT:
        # average ranks are multiples of 1/2
        doubled = np.rint(2 * ranks).astype(np.int64)
        p_value = _exact_p(doubled, int(round(2 * w)))
        method = METHOD_EXACT
    else:
        p_value = _normal_p(ranks, w)
        method = METHOD_NORMAL
    _LOGGER.debug("Wilcoxon n=%s W=%s p=%s (%s)", d.size, w, p_value, method)
    return WilcoxonResult(w, p_value, int(d.size), method, w_plus, w_minus)
