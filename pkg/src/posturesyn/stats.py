"""Two-sample tests used for group comparisons at desk scale.

The rank test handles ties with midranks. Its exact mode counts the null
distribution of the rank sum by dynamic programming over doubled midranks
(integers), conditioning on the observed pooled values; the two-sided p is
the doubled smaller tail, capped at 1. The eta-squared effect size uses the
normal-approximation z (a reporting convention, recorded in the result).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import stdtr

EXACT_LIMIT = 16


class Method(Enum):
    MANN_WHITNEY_U = "mann_whitney_u"
    INDEPENDENT_T = "independent_t"


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    effect_size: float
    method: Method
    n1: int
    n2: int
    mode: str = ""
    notes: str = ""

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")


def _midranks(pooled: np.ndarray) -> np.ndarray:
    order = np.argsort(pooled, kind="stable")
    ranks = np.empty(pooled.size)
    i = 0
    while i < pooled.size:
        j = i
        while j + 1 < pooled.size and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _u_statistic(a: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray]:
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    n1 = a.size
    r1 = ranks[:n1].sum()
    u1 = r1 - n1 * (n1 + 1) / 2.0
    return u1, ranks


def _exact_tail_counts(doubled_ranks: list[int], n1: int) -> dict[int, int]:
    """Count size-n1 subsets by doubled rank sum (knapsack over items)."""
    total = sum(doubled_ranks)
    # table[k][s] = number of k-subsets with doubled-rank sum s
    table = [dict() for _ in range(n1 + 1)]
    table[0][0] = 1
    for w in doubled_ranks:
        for k in range(min(n1, len(doubled_ranks)), 0, -1):
            prev = table[k - 1]
            cur = table[k]
            for s, c in prev.items():
                if s + w <= total:
                    cur[s + w] = cur.get(s + w, 0) + c
    return table[n1]


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def mann_whitney_u(a, b, mode: str = "auto") -> TestResult:
    """Rank-sum test; U is the count of (a, b) pairs with a above b.

    ``mode``: "exact" enumerates the conditional null distribution
    (n1 + n2 <= 16), "normal_approx" uses the tie-corrected normal
    approximation with continuity correction, "auto" picks exact when small
    enough.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    n1, n2 = a.size, b.size
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be nonempty")
    total_n = n1 + n2
    if mode == "auto":
        mode = "exact" if total_n <= EXACT_LIMIT else "normal_approx"
    if mode not in ("exact", "normal_approx"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exact" and total_n > EXACT_LIMIT:
        raise ValueError(
            f"exact mode supports n1 + n2 <= {EXACT_LIMIT}; use normal_approx"
        )

    u1, ranks = _u_statistic(a, b)

    # tie-corrected normal z, used for the approximate p and for eta^2
    mu = n1 * n2 / 2.0
    _, counts = np.unique(np.concatenate([a, b]), return_counts=True)
    tie_term = float((counts**3 - counts).sum())
    sigma2 = n1 * n2 / 12.0 * ((total_n + 1) - tie_term / (total_n * (total_n - 1)))
    sigma = math.sqrt(sigma2) if sigma2 > 0 else 0.0
    z_plain = (u1 - mu) / sigma if sigma > 0 else 0.0
    eta_sq = z_plain**2 / total_n

    if mode == "normal_approx":
        if sigma == 0.0:
            p = 1.0
        else:
            cc = 0.5 if u1 != mu else 0.0
            z = (abs(u1 - mu) - cc) / sigma
            p = min(1.0, 2.0 * _normal_sf(max(z, 0.0)))
    else:
        doubled = [int(round(2 * r)) for r in ranks]
        counts_by_sum = _exact_tail_counts(doubled, n1)
        n_total = math.comb(total_n, n1)
        offset = n1 * (n1 + 1)  # doubled rank sum -> doubled U
        u_doubled = int(round(2 * u1))
        lo = sum(c for s, c in counts_by_sum.items() if s - offset <= u_doubled)
        hi = sum(c for s, c in counts_by_sum.items() if s - offset >= u_doubled)
        p = min(1.0, 2.0 * min(lo, hi) / n_total)

    return TestResult(
        statistic=float(u1),
        p_value=p,
        effect_size=float(eta_sq),
        method=Method.MANN_WHITNEY_U,
        n1=n1,
        n2=n2,
        mode=mode,
        notes="eta_sq = z^2/N via normal approximation",
    )


def independent_t(a, b) -> TestResult:
    """Pooled-variance two-sample t-test, two-sided, df = n1 + n2 - 2."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    n1, n2 = a.size, b.size
    if n1 < 2 or n2 < 2:
        raise ValueError("each sample needs >= 2 observations")
    df = n1 + n2 - 2
    ss = float(((a - a.mean()) ** 2).sum() + ((b - b.mean()) ** 2).sum())
    pooled_var = ss / df
    if pooled_var == 0.0:
        raise ValueError("zero pooled variance; t is undefined")
    se = math.sqrt(pooled_var * (1.0 / n1 + 1.0 / n2))
    t_stat = (a.mean() - b.mean()) / se
    p = 2.0 * float(stdtr(df, -abs(t_stat)))
    # Cohen's d on the pooled sd
    d = (a.mean() - b.mean()) / math.sqrt(pooled_var)
    return TestResult(
        statistic=float(t_stat),
        p_value=min(1.0, p),
        effect_size=float(d),
        method=Method.INDEPENDENT_T,
        n1=n1,
        n2=n2,
        mode="pooled",
        notes="effect size is Cohen's d",
    )
