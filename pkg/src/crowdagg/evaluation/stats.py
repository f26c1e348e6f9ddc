"""Paired and unpaired significance tests for comparing success outcomes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from scipy.stats import binom, chi2, norm

from .. import errors


@dataclass(frozen=True)
class McNemarResult:
    statistic: float
    p_value: float
    b: int  # a right, b wrong
    c: int  # a wrong, b right
    exact: bool = False


@dataclass(frozen=True)
class ProportionResult:
    z: float
    p_value: float
    p1: float
    p2: float


def discordant_counts(outcomes_a: Sequence[int], outcomes_b: Sequence[int]) -> tuple[int, int]:
    if len(outcomes_a) != len(outcomes_b):
        raise errors.LengthMismatch(f"outcome sequences differ in length ({len(outcomes_a)} vs {len(outcomes_b)})")
    if len(outcomes_a) == 0:
        raise errors.LengthMismatch("outcome sequences are empty")
    b = c = 0
    for x, y in zip(outcomes_a, outcomes_b):
        x, y = int(bool(x)), int(bool(y))
        b += x and not y
        c += y and not x
    return b, c


def mcnemar_test(outcomes_a: Sequence[int], outcomes_b: Sequence[int], exact: bool = False) -> McNemarResult:
    """McNemar's test on paired success bits.

    The chi-square form has no continuity correction. With ``exact=True`` the
    p-value is the two-sided binomial tail on the discordant pairs instead.
    """
    b, c = discordant_counts(outcomes_a, outcomes_b)
    return mcnemar_from_counts(b, c, exact)


def mcnemar_from_counts(b: int, c: int, exact: bool = False) -> McNemarResult:
    if b < 0 or c < 0:
        raise ValueError("discordant counts must be non-negative")
    m = b + c
    if m == 0:
        return McNemarResult(0.0, 1.0, b, c, exact)
    stat = (b - c) ** 2 / m
    if exact:
        p = min(1.0, 2.0 * float(binom.cdf(min(b, c), m, 0.5)))
    else:
        p = float(chi2.sf(stat, 1))
    return McNemarResult(float(stat), p, b, c, exact)


def proportion_test(s1: int, n1: int, s2: int, n2: int) -> ProportionResult:
    """Pooled two-proportion z-test, two-tailed.

    The p-value is ``2 * (1 - Phi(|z|))``; it reaches exactly 0 once the tail
    drops below double precision.
    """
    if n1 < 1 or n2 < 1:
        raise errors.ZeroSample(f"sample sizes must be positive (got {n1}, {n2})")
    if not (0 <= s1 <= n1 and 0 <= s2 <= n2):
        raise ValueError("successes must lie between 0 and the sample size")
    p1, p2 = s1 / n1, s2 / n2
    pooled = (s1 + s2) / (n1 + n2)
    se = math.sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2))
    if se == 0.0:
        return ProportionResult(0.0, 1.0, p1, p2)
    z = (p1 - p2) / se
    p = 2.0 * (1.0 - float(norm.cdf(abs(z))))
    return ProportionResult(z, min(1.0, p), p1, p2)
