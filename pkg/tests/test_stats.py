"""Exact binomial intervals and the signed-rank test."""
import itertools

import numpy as np
import pytest
from scipy import stats

from ctl.error_handler import StatisticsError
from ctl.metrics.stats import (
    METHOD_EXACT,
    METHOD_NORMAL,
    clopper_pearson,
    wilcoxon_signed_rank,
)


def enumerated_p(differences):
    """Two-sided p from every sign assignment of the ranked magnitudes."""
    d = np.array([v for v in differences if v != 0.0])
    ranks = stats.rankdata(np.abs(d))
    observed = min(ranks[d > 0].sum(), ranks[d < 0].sum())
    at_most = 0
    for signs in itertools.product((0, 1), repeat=len(d)):
        positive = float(np.dot(signs, ranks))
        if positive <= observed + 1e-9:
            at_most += 1
    return min(1.0, 2.0 * at_most / 2 ** len(d))


class TestClopperPearson:

    def test_reference_interval(self):
        lower, upper = clopper_pearson(54, 59)
        assert lower == pytest.approx(0.8132, abs=1e-4)
        assert upper == pytest.approx(0.9719, abs=1e-4)

    def test_all_successes(self):
        lower, upper = clopper_pearson(10, 10)
        assert lower == pytest.approx(0.025 ** (1 / 10), abs=1e-10)
        assert upper == 1.0

    def test_no_successes(self):
        lower, upper = clopper_pearson(0, 10)
        assert lower == 0.0
        assert upper == pytest.approx(1 - 0.025 ** (1 / 10), abs=1e-10)

    def test_contains_point_estimate(self):
        for x in range(0, 21):
            lower, upper = clopper_pearson(x, 20, 0.9)
            assert lower <= x / 20 <= upper

    def test_wider_at_higher_confidence(self):
        narrow = clopper_pearson(7, 30, 0.8)
        wide = clopper_pearson(7, 30, 0.99)
        assert wide[0] < narrow[0] and wide[1] > narrow[1]

    @pytest.mark.parametrize("x, n, confidence", [
        (5, 4, 0.95), (0, 0, 0.95), (-1, 4, 0.95), (1, 4, 1.0), (1.5, 4, 0.95),
    ])
    def test_invalid(self, x, n, confidence):
        with pytest.raises(StatisticsError):
            clopper_pearson(x, n, confidence)


class TestWilcoxon:

    def test_five_positive_differences(self):
        result = wilcoxon_signed_rank([0.1, 0.2, 0.3, 0.4, 0.5])
        assert result.statistic == 0.0
        assert result.w_plus == 15.0
        assert result.p_value == pytest.approx(0.0625)
        assert result.method == METHOD_EXACT

    @pytest.mark.parametrize("differences", [
        [0.3, -0.1, 0.2, 0.5, -0.4, 0.6],
        [0.1, 0.1, -0.1, 0.2, 0.2, 0.3, -0.05],
        [1.0, -2.0, 3.0, 0.0, 4.0, -5.0, 6.0, 7.0],
    ])
    def test_exact_matches_enumeration(self, differences):
        result = wilcoxon_signed_rank(differences)
        assert result.p_value == pytest.approx(enumerated_p(differences), abs=1e-12)

    def test_zero_differences_are_dropped(self):
        result = wilcoxon_signed_rank([0.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0])
        assert result.n == 5

    def test_symmetric_in_sign(self):
        d = [0.3, -0.1, 0.2, 0.5, -0.4, 0.6]
        assert (wilcoxon_signed_rank(d).p_value
                == pytest.approx(wilcoxon_signed_rank([-v for v in d]).p_value))

    def test_normal_approximation(self):
        # distinct magnitudes, so no tie correction applies
        d = [k if k % 3 else -k for k in range(1, 26)]
        result = wilcoxon_signed_rank(d)
        assert result.method == METHOD_NORMAL
        n = 25
        z = (result.statistic - n * (n + 1) / 4) / np.sqrt(n * (n + 1) * (2 * n + 1) / 24)
        assert result.p_value == pytest.approx(2 * stats.norm.cdf(z), rel=1e-9)

    def test_all_zero(self):
        with pytest.raises(StatisticsError):
            wilcoxon_signed_rank([0.0, 0.0, 0.0, 0.0, 0.0])

    def test_too_few_pairs(self):
        with pytest.raises(StatisticsError):
            wilcoxon_signed_rank([0.1, -0.2, 0.3, 0.0])

    def test_non_finite(self):
        with pytest.raises(StatisticsError):
            wilcoxon_signed_rank([0.1, np.nan, 0.3, 0.4, 0.5])
