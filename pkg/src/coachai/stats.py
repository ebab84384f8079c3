"""Statistics engine for the study pipeline.

Descriptives, one-sample t-test, between-subjects one-way ANOVA,
one-way repeated-measures ANOVA, and paired post-hoc comparisons.
P-values come from Student-t and F distributions evaluated through the
regularized incomplete beta function (continued-fraction form), so the
module has no numerical dependencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

__all__ = [
    "SampleSummary",
    "TestResult",
    "descriptives",
    "one_sample_t",
    "anova_between",
    "rm_anova",
    "posthoc_pairwise",
    "t_cdf",
    "f_cdf",
]


@dataclass(frozen=True)
class SampleSummary:
    n: int
    mean: float
    std_error: float
    median: float
    std_deviation: float  # n-1 denominator
    variance: float
    range: float
    min: float
    max: float


@dataclass(frozen=True)
class TestResult:
    statistic: float
    df: tuple[float, ...]  # (df,) for t, (df1, df2) for F
    p_value: float
    effect_direction: int  # sign of the underlying effect; 0 when none

    @property
    def infinite(self) -> bool:
        return math.isinf(self.statistic)


# ---------------------------------------------------------------------------
# Special functions
# ---------------------------------------------------------------------------

_MAX_CF_ITER = 300
_CF_EPS = 1e-15
_CF_TINY = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_CF_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise DomainError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise DomainError("beta parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # Use the continued fraction on the side where it converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_cdf(x: float, df: float) -> float:
    """CDF of Student's t distribution with `df` degrees of freedom."""
    if df <= 0:
        raise DomainError("t degrees of freedom must be positive")
    if math.isinf(x):
        return 0.0 if x < 0 else 1.0
    if x == 0.0:
        return 0.5
    tail = 0.5 * _reg_inc_beta(df / 2.0, 0.5, df / (df + x * x))
    return tail if x < 0 else 1.0 - tail


def f_cdf(x: float, df1: float, df2: float) -> float:
    """CDF of the F distribution with (df1, df2) degrees of freedom."""
    if df1 <= 0 or df2 <= 0:
        raise DomainError("F degrees of freedom must be positive")
    if x < 0:
        raise DomainError("F statistic support is x >= 0")
    if math.isinf(x):
        return 1.0
    return _reg_inc_beta(df1 / 2.0, df2 / 2.0, df1 * x / (df1 * x + df2))


# ---------------------------------------------------------------------------
# Descriptives
# ---------------------------------------------------------------------------

def descriptives(values: list[float]) -> SampleSummary:
    """Sample summary with n-1 std deviation and midpoint median."""
    n = len(values)
    if n == 0:
        raise DomainError("descriptives requires a non-empty sample")
    mean = math.fsum(values) / n
    if n > 1:
        variance = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    else:
        variance = 0.0
    sd = math.sqrt(variance)
    ordered = sorted(values)
    mid = n // 2
    median = ordered[mid] if n % 2 else (ordered[mid - 1] + ordered[mid]) / 2.0
    lo, hi = ordered[0], ordered[-1]
    return SampleSummary(
        n=n,
        mean=mean,
        std_error=sd / math.sqrt(n),
        median=median,
        std_deviation=sd,
        variance=variance,
        range=hi - lo,
        min=lo,
        max=hi,
    )


# ---------------------------------------------------------------------------
# Tests
# ---------------------------------------------------------------------------

def _two_sided_t_p(t: float, df: float) -> float:
    return 2.0 * (1.0 - t_cdf(abs(t), df))


def one_sample_t(values: list[float], mu0: float) -> TestResult:
    """Two-sided one-sample t-test of the mean against mu0."""
    n = len(values)
    if n < 2:
        raise DomainError("one-sample t-test requires n >= 2")
    s = descriptives(values)
    df = float(n - 1)
    diff = s.mean - mu0
    if s.std_deviation == 0.0:
        if diff == 0.0:
            return TestResult(0.0, (df,), 1.0, 0)
        # Zero variance off-center: signal an infinite statistic.
        stat = math.copysign(math.inf, diff)
        return TestResult(stat, (df,), 0.0, 1 if diff > 0 else -1)
    t = diff / (s.std_deviation / math.sqrt(n))
    direction = 0 if diff == 0 else (1 if diff > 0 else -1)
    return TestResult(t, (df,), min(1.0, _two_sided_t_p(t, df)), direction)


def anova_between(groups: list[list[float]]) -> TestResult:
    """One-way between-subjects ANOVA over >= 2 groups."""
    if len(groups) < 2:
        raise DomainError("ANOVA requires at least two groups")
    if any(len(g) < 2 for g in groups):
        raise DomainError("every ANOVA group needs at least two values")
    k = len(groups)
    n_total = sum(len(g) for g in groups)
    grand = math.fsum(math.fsum(g) for g in groups) / n_total
    ss_between = math.fsum(
        len(g) * (math.fsum(g) / len(g) - grand) ** 2 for g in groups
    )
    ss_within = math.fsum(
        math.fsum((v - math.fsum(g) / len(g)) ** 2 for v in g) for g in groups
    )
    df1 = float(k - 1)
    df2 = float(n_total - k)
    ms_between = ss_between / df1
    ms_within = ss_within / df2
    if ms_within == 0.0:
        if ms_between == 0.0:
            return TestResult(0.0, (df1, df2), 1.0, 0)
        return TestResult(math.inf, (df1, df2), 0.0, 1)
    f = ms_between / ms_within
    return TestResult(f, (df1, df2), 1.0 - f_cdf(f, df1, df2), 1 if f > 0 else 0)


def _check_matrix(matrix: list[list[float]]) -> tuple[int, int]:
    if len(matrix) < 2:
        raise DomainError("repeated-measures design needs >= 2 subjects")
    t = len(matrix[0])
    if t < 2:
        raise DomainError("repeated-measures design needs >= 2 time points")
    if any(len(row) != t for row in matrix):
        raise DomainError("repeated-measures matrix must be complete (listwise)")
    return len(matrix), t


def rm_anova(matrix: list[list[float]]) -> TestResult:
    """One-way repeated-measures ANOVA; rows are subjects, columns time points.

    No sphericity correction is applied.
    """
    s, t = _check_matrix(matrix)
    grand = math.fsum(math.fsum(row) for row in matrix) / (s * t)
    col_means = [math.fsum(row[j] for row in matrix) / s for j in range(t)]
    row_means = [math.fsum(row) / t for row in matrix]
    ss_time = s * math.fsum((cm - grand) ** 2 for cm in col_means)
    ss_error = math.fsum(
        (matrix[i][j] - col_means[j] - row_means[i] + grand) ** 2
        for i in range(s)
        for j in range(t)
    )
    df1 = float(t - 1)
    df2 = float((t - 1) * (s - 1))
    ms_time = ss_time / df1
    ms_error = ss_error / df2
    if ms_error == 0.0:
        if ms_time == 0.0:
            return TestResult(0.0, (df1, df2), 1.0, 0)
        return TestResult(math.inf, (df1, df2), 0.0, 1)
    f = ms_time / ms_error
    return TestResult(f, (df1, df2), 1.0 - f_cdf(f, df1, df2), 1 if f > 0 else 0)


def paired_t(a: list[float], b: list[float]) -> TestResult:
    """Two-sided paired t-test between two equal-length columns."""
    if len(a) != len(b) or len(a) < 2:
        raise DomainError("paired t-test requires two equal columns with n >= 2")
    diffs = [x - y for x, y in zip(a, b)]
    return one_sample_t(diffs, 0.0)


def posthoc_pairwise(
    matrix: list[list[float]], correction: str = "bonferroni"
) -> list[tuple[tuple[int, int], TestResult]]:
    """Paired t-tests for every column pair, multiplicity-corrected.

    Returns [((i, j), TestResult), ...] with 0-based column indices.
    """
    if correction not in ("bonferroni", "none"):
        raise DomainError(f"unknown correction {correction!r}")
    s, t = _check_matrix(matrix)
    pairs = [(i, j) for i in range(t) for j in range(i + 1, t)]
    m = len(pairs)
    results = []
    for i, j in pairs:
        r = paired_t([row[i] for row in matrix], [row[j] for row in matrix])
        p = r.p_value * m if correction == "bonferroni" else r.p_value
        results.append(((i, j), TestResult(r.statistic, r.df, min(1.0, p), r.effect_direction)))
    return results
