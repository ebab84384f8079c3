"""Statistics engine tests.

Every [DERIVED] expectation is checked against an oracle computed
independently here: mpmath for high-precision CDF references, scipy for
test statistics, and a from-first-principles sums-of-squares
decomposition for the ANOVA family.
"""

from __future__ import annotations

import math
import random
import statistics
import time

import mpmath
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from coachai.errors import DomainError
from coachai.stats import (
    anova_between,
    descriptives,
    f_cdf,
    one_sample_t,
    paired_t,
    posthoc_pairwise,
    rm_anova,
    t_cdf,
)

mpmath.mp.dps = 50

# Frozen fixtures: committed samples the oracle values are computed from.
SAMPLE_A = [4.1, 5.3, 2.2, 6.6, 4.9, 5.5, 3.8, 4.4, 5.9, 3.1]
SAMPLE_B = [5.0, 6.1, 3.0, 7.0, 5.2, 6.3, 4.1, 4.9, 6.6, 3.9]
GROUP_1 = [23.0, 25.5, 28.1, 22.9, 26.4, 27.0, 24.2, 25.8, 23.7, 26.9]
GROUP_2 = [20.1, 21.5, 19.8, 22.3, 20.9, 21.1, 19.5, 22.0]
RM_MATRIX = [
    [4.0, 4.5, 5.0],
    [3.5, 4.0, 4.8],
    [5.0, 5.2, 5.6],
    [2.8, 3.9, 4.1],
    [4.4, 4.3, 5.2],
    [3.9, 4.8, 4.9],
]


def mp_t_cdf(x: float, df: float) -> float:
    x_mp, df_mp = mpmath.mpf(x), mpmath.mpf(df)
    z = df_mp / (df_mp + x_mp * x_mp)
    half = mpmath.betainc(df_mp / 2, mpmath.mpf(1) / 2, 0, z, regularized=True) / 2
    return float(1 - half) if x >= 0 else float(half)


def mp_f_cdf(x: float, d1: float, d2: float) -> float:
    if x <= 0:
        return 0.0
    x_mp, a, b = mpmath.mpf(x), mpmath.mpf(d1), mpmath.mpf(d2)
    z = a * x_mp / (a * x_mp + b)
    return float(mpmath.betainc(a / 2, b / 2, 0, z, regularized=True))


class TestDescriptives:
    def test_paper_anchor_std_error(self):
        # Any 19-point sample with sd 9.371 must report SE 9.371/sqrt(19).
        rng = random.Random(19)
        base = [rng.gauss(36.0, 9.0) for _ in range(19)]
        mean = sum(base) / 19
        sd = statistics.stdev(base)
        scaled = [mean + (v - mean) * 9.371 / sd for v in base]
        start = time.perf_counter()
        summary = descriptives(scaled)
        elapsed = time.perf_counter() - start
        assert summary.n == 19
        assert summary.std_deviation == pytest.approx(9.371, abs=1e-9)
        assert abs(summary.std_error - 2.150) < 0.001
        assert elapsed < 0.001

    def test_paper_anchor_range(self):
        values = [19.0, 53.0] + [30.0] * 17
        summary = descriptives(values)
        assert summary.range == 34.00
        assert summary.min == 19.0 and summary.max == 53.0

    def test_against_statistics_module(self):
        summary = descriptives(SAMPLE_A)
        assert summary.mean == pytest.approx(statistics.fmean(SAMPLE_A), abs=1e-12)
        assert summary.variance == pytest.approx(statistics.variance(SAMPLE_A), abs=1e-12)
        assert summary.std_deviation == pytest.approx(statistics.stdev(SAMPLE_A), abs=1e-12)
        assert summary.median == pytest.approx(statistics.median(SAMPLE_A), abs=1e-12)

    def test_single_value(self):
        summary = descriptives([7.0])
        assert summary.std_deviation == 0.0
        assert summary.range == 0.0
        assert summary.median == 7.0

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            descriptives([])


class TestCdfs:
    # Reference grid: values cover both tails, center, and heavy dfs.
    @pytest.mark.parametrize("x", [-8.0, -2.5, -1.0, -0.1, 0.0, 0.3, 1.96, 4.2, 12.0])
    @pytest.mark.parametrize("df", [1, 2, 5, 17, 18, 36, 120])
    def test_t_cdf_against_mpmath(self, x, df):
        assert t_cdf(x, df) == pytest.approx(mp_t_cdf(x, df), abs=1e-10)

    @pytest.mark.parametrize("x", [0.0, 0.05, 0.5, 1.0, 3.1, 10.0, 80.0])
    @pytest.mark.parametrize("dfs", [(1, 16), (2, 36), (5, 40), (1, 1), (10, 3)])
    def test_f_cdf_against_mpmath(self, x, dfs):
        assert f_cdf(x, *dfs) == pytest.approx(mp_f_cdf(x, *dfs), abs=1e-10)

    def test_runtime_budget(self):
        start = time.perf_counter()
        for df in range(1, 60):
            for i in range(-30, 31):
                t_cdf(i / 5.0, df)
                f_cdf(abs(i) / 5.0, df, df + 3)
        assert time.perf_counter() - start < 1.0

    @given(
        x=st.floats(-50, 50),
        df=st.integers(min_value=1, max_value=200),
    )
    @settings(max_examples=1000, deadline=None)
    def test_t_cdf_symmetry_and_bounds(self, x, df):
        lo = t_cdf(x, df)
        hi = t_cdf(-x, df)
        assert 0.0 <= lo <= 1.0
        assert lo + hi == pytest.approx(1.0, abs=1e-12)

    @given(
        a=st.floats(-20, 20),
        delta=st.floats(1e-6, 10),
        df=st.integers(min_value=1, max_value=100),
    )
    @settings(max_examples=1000, deadline=None)
    def test_t_cdf_monotone(self, a, delta, df):
        assert t_cdf(a + delta, df) >= t_cdf(a, df)


class TestOneSampleT:
    def test_df_anchor_n18(self):
        values = [float(i) for i in range(18)]
        result = one_sample_t(values, 5.0)
        assert result.df == (17,)

    def test_against_scipy(self):
        result = one_sample_t(SAMPLE_A, 4.0)
        ref = scipy.stats.ttest_1samp(SAMPLE_A, 4.0)
        assert result.statistic == pytest.approx(ref.statistic, abs=1e-9)
        assert result.p_value == pytest.approx(ref.pvalue, abs=1e-9)

    def test_formula_oracle(self):
        mu0 = 4.0
        mean = statistics.fmean(SAMPLE_A)
        se = statistics.stdev(SAMPLE_A) / math.sqrt(len(SAMPLE_A))
        expected = (mean - mu0) / se
        assert one_sample_t(SAMPLE_A, mu0).statistic == pytest.approx(expected, abs=1e-12)

    def test_zero_variance_infinite(self):
        result = one_sample_t([3.0, 3.0, 3.0], 1.0)
        assert math.isinf(result.statistic) and result.statistic > 0
        assert result.p_value == 0.0
        assert result.infinite

    def test_zero_variance_at_mu0(self):
        # No variance and no effect: statistic undefined, reported as 0/1.
        result = one_sample_t([3.0, 3.0, 3.0], 3.0)
        assert result.p_value == 1.0

    @given(
        shift=st.floats(-100, 100, allow_nan=False),
        scale=st.floats(0.01, 100),
    )
    @settings(max_examples=1000, deadline=None)
    def test_location_scale_invariance(self, shift, scale):
        base = one_sample_t(SAMPLE_A, 4.0)
        moved = one_sample_t(
            [v * scale + shift for v in SAMPLE_A], 4.0 * scale + shift
        )
        assert moved.statistic == pytest.approx(base.statistic, rel=1e-9)


class TestAnovaBetween:
    def test_df_anchor_10_and_8(self):
        result = anova_between([GROUP_1, GROUP_2])
        assert result.df == (1, 16)

    def test_against_scipy(self):
        result = anova_between([GROUP_1, GROUP_2])
        ref = scipy.stats.f_oneway(GROUP_1, GROUP_2)
        assert result.statistic == pytest.approx(ref.statistic, abs=1e-9)
        assert result.p_value == pytest.approx(ref.pvalue, abs=1e-9)

    def test_sums_of_squares_oracle(self):
        groups = [GROUP_1, GROUP_2, [30.0, 31.5, 29.8, 32.0]]
        all_vals = [v for g in groups for v in g]
        grand = sum(all_vals) / len(all_vals)
        ss_between = sum(len(g) * (sum(g) / len(g) - grand) ** 2 for g in groups)
        ss_within = sum((v - sum(g) / len(g)) ** 2 for g in groups for v in g)
        df_b, df_w = len(groups) - 1, len(all_vals) - len(groups)
        expected = (ss_between / df_b) / (ss_within / df_w)
        result = anova_between(groups)
        assert result.statistic == pytest.approx(expected, abs=1e-9)
        assert result.df == (df_b, df_w)

    def test_f_equals_t_squared_on_two_groups(self):
        rng = random.Random(42)
        for _ in range(1000):
            n1, n2 = rng.randint(2, 12), rng.randint(2, 12)
            g1 = [rng.gauss(0, 1) for _ in range(n1)]
            g2 = [rng.gauss(0.5, 1) for _ in range(n2)]
            f = anova_between([g1, g2]).statistic
            t = scipy.stats.ttest_ind(g1, g2).statistic
            assert f == pytest.approx(t * t, rel=1e-9, abs=1e-12)

    def test_identical_groups_zero_f(self):
        result = anova_between([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]])
        assert result.statistic == pytest.approx(0.0, abs=1e-12)
        assert result.p_value == pytest.approx(1.0, abs=1e-12)


class TestRmAnova:
    def test_sums_of_squares_oracle(self):
        m = RM_MATRIX
        n, k = len(m), len(m[0])
        grand = sum(sum(r) for r in m) / (n * k)
        col_means = [sum(r[j] for r in m) / n for j in range(k)]
        row_means = [sum(r) / k for r in m]
        ss_time = n * sum((cm - grand) ** 2 for cm in col_means)
        ss_error = sum(
            (m[i][j] - row_means[i] - col_means[j] + grand) ** 2
            for i in range(n)
            for j in range(k)
        )
        df1, df2 = k - 1, (n - 1) * (k - 1)
        expected = (ss_time / df1) / (ss_error / df2)
        result = rm_anova(m)
        assert result.statistic == pytest.approx(expected, abs=1e-9)
        assert result.df == (df1, df2)
        assert result.p_value == pytest.approx(1.0 - mp_f_cdf(expected, df1, df2), abs=1e-9)

    def test_against_scipy_friedman_style_check(self):
        # Cross-check via scipy's f distribution on the oracle statistic.
        result = rm_anova(RM_MATRIX)
        assert result.p_value == pytest.approx(
            scipy.stats.f.sf(result.statistic, *result.df), abs=1e-9
        )

    def test_constant_columns(self):
        result = rm_anova([[2.0, 2.0], [2.0, 2.0], [2.0, 2.0]])
        assert result.p_value == pytest.approx(1.0)

    def test_ragged_rejected(self):
        with pytest.raises(DomainError):
            rm_anova([[1.0, 2.0], [1.0]])


class TestPairedAndPosthoc:
    def test_paired_t_against_scipy(self):
        result = paired_t(SAMPLE_A, SAMPLE_B)
        ref = scipy.stats.ttest_rel(SAMPLE_A, SAMPLE_B)
        assert result.statistic == pytest.approx(ref.statistic, abs=1e-9)
        assert result.p_value == pytest.approx(ref.pvalue, abs=1e-9)
        assert result.df == (len(SAMPLE_A) - 1,)

    def test_posthoc_bonferroni(self):
        pairs = posthoc_pairwise(RM_MATRIX)
        k = len(RM_MATRIX[0])
        n_pairs = k * (k - 1) // 2
        assert [idx for idx, _ in pairs] == [
            (i, j) for i in range(k) for j in range(i + 1, k)
        ]
        for (i, j), result in pairs:
            a = [row[i] for row in RM_MATRIX]
            b = [row[j] for row in RM_MATRIX]
            raw = scipy.stats.ttest_rel(a, b)
            assert result.statistic == pytest.approx(raw.statistic, abs=1e-9)
            assert result.p_value == pytest.approx(
                min(1.0, raw.pvalue * n_pairs), abs=1e-9
            )

    def test_posthoc_uncorrected(self):
        pairs = posthoc_pairwise(RM_MATRIX, correction="none")
        for (i, j), result in pairs:
            a = [row[i] for row in RM_MATRIX]
            b = [row[j] for row in RM_MATRIX]
            assert result.p_value == pytest.approx(
                scipy.stats.ttest_rel(a, b).pvalue, abs=1e-9
            )

    def test_mismatched_lengths_rejected(self):
        with pytest.raises(DomainError):
            paired_t([1.0, 2.0], [1.0])
