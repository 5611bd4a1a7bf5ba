"""VaR backtesting: hit sequences, Kupiec POF and Christoffersen IND tests.

Both likelihood-ratio statistics are asymptotically chi-square with one
degree of freedom; p-values use the exact identity sf(x) = erfc(sqrt(x/2)).
The unconditional coverage test compares the realized hit frequency with the
effective tail mass (alpha for a lower tail, 1 - alpha for an upper tail);
the independence test compares hit probabilities conditional on the previous
day's hit state, with the 0^0 := 1 convention so empty transition rows drop
out of the likelihood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date as Date

import numpy as np

from .errors import DateMisalignment, EmptySequence, InputError, NegativeStatistic
from .fhs import QuantileSeries, ScalarSeries
from .volgrid import _readonly

TAIL_LOWER = "lower"
TAIL_UPPER = "upper"


@dataclass(frozen=True)
class HitSequence:
    """Indicator series of VaR exceedances for one tail."""

    dates: tuple[Date, ...]
    hits: np.ndarray
    tail: str
    alpha: float

    def __post_init__(self):
        hits = np.asarray(self.hits, dtype=np.int8)
        if hits.ndim != 1 or len(hits) != len(self.dates):
            raise InputError("one hit flag per date required")
        if np.any((hits != 0) & (hits != 1)):
            raise InputError("hits must be 0 or 1")
        object.__setattr__(self, "hits", _readonly(hits).astype(np.int8))
        if self.tail not in (TAIL_LOWER, TAIL_UPPER):
            raise InputError(f"unknown tail {self.tail!r}")

    @property
    def effective_level(self) -> float:
        """Expected hit probability under correct coverage."""
        return self.alpha if self.tail == TAIL_LOWER else 1.0 - self.alpha


@dataclass(frozen=True)
class TransitionCounts:
    """First-order transition counts of a 0/1 sequence."""

    t00: int
    t01: int
    t10: int
    t11: int

    @property
    def total(self) -> int:
        return self.t00 + self.t01 + self.t10 + self.t11

    @property
    def ones(self) -> int:
        return self.t01 + self.t11


@dataclass(frozen=True)
class BacktestReport:
    """Both tests on one hit sequence."""

    tail: str
    alpha: float
    alpha_hat: float
    counts: TransitionCounts
    pof_stat: float
    pof_pvalue: float
    ind_stat: float
    ind_pvalue: float


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def hit_sequence(realized: ScalarSeries, forecast: QuantileSeries,
                 alpha: float) -> HitSequence:
    """Hits against the alpha-quantile forecast series.

    A lower tail (alpha < 0.5) registers a hit when the realization is less
    than or equal to the bound; an upper tail when it is greater than or
    equal to it.
    """
    if realized.dates != forecast.dates:
        raise DateMisalignment("realized and forecast dates differ")
    bound = forecast.level(alpha)
    if alpha < 0.5:
        hits = realized.values <= bound
        tail = TAIL_LOWER
    else:
        hits = realized.values >= bound
        tail = TAIL_UPPER
    return HitSequence(realized.dates, hits.astype(np.int8), tail, alpha)


def transition_counts(hits: np.ndarray) -> TransitionCounts:
    h = np.asarray(hits, dtype=np.int8)
    prev, curr = h[:-1], h[1:]
    return TransitionCounts(
        int(np.sum((prev == 0) & (curr == 0))),
        int(np.sum((prev == 0) & (curr == 1))),
        int(np.sum((prev == 1) & (curr == 0))),
        int(np.sum((prev == 1) & (curr == 1))),
    )


# ---------------------------------------------------------------------------
# Test statistics
# ---------------------------------------------------------------------------

def chi2_sf1(x: float) -> float:
    """Survival function of chi-square with 1 dof, sf(x) = erfc(sqrt(x/2))."""
    if x < 0:
        raise NegativeStatistic("statistic must be non-negative")
    return math.erfc(math.sqrt(x / 2.0))


def _loglik_term(count: int, p: float) -> float:
    # 0^0 := 1 so empty categories contribute nothing.
    if count == 0:
        return 0.0
    if p <= 0.0:
        return -math.inf
    return count * math.log(p)


def pof_statistic(t0: int, t1: int, level: float) -> float:
    """Kupiec likelihood ratio from the miss/hit counts at effective level."""
    if t0 + t1 < 1:
        raise EmptySequence("no observations")
    alpha_hat = t1 / (t0 + t1)
    log_null = _loglik_term(t0, 1.0 - level) + _loglik_term(t1, level)
    log_alt = _loglik_term(t0, 1.0 - alpha_hat) + _loglik_term(t1, alpha_hat)
    return max(-2.0 * (log_null - log_alt), 0.0)


def ind_statistic(c: TransitionCounts) -> float:
    """Christoffersen likelihood ratio from first-order transition counts."""
    if c.total < 1:
        raise EmptySequence("no transitions")
    a01 = c.t01 / (c.t00 + c.t01) if c.t00 + c.t01 > 0 else 0.0
    a11 = c.t11 / (c.t10 + c.t11) if c.t10 + c.t11 > 0 else 0.0
    abar = (c.t01 + c.t11) / c.total
    log_null = (_loglik_term(c.t00 + c.t10, 1.0 - abar)
                + _loglik_term(c.t01 + c.t11, abar))
    log_alt = (_loglik_term(c.t00, 1.0 - a01) + _loglik_term(c.t01, a01)
               + _loglik_term(c.t10, 1.0 - a11) + _loglik_term(c.t11, a11))
    return max(-2.0 * (log_null - log_alt), 0.0)


def kupiec_pof(h: HitSequence):
    """Proportion-of-failures likelihood ratio and its chi2_1 p-value."""
    if len(h.hits) < 2:
        raise EmptySequence("need at least 2 observations")
    t1 = int(h.hits.sum())
    stat = pof_statistic(len(h.hits) - t1, t1, h.effective_level)
    return stat, chi2_sf1(stat)


def christoffersen_ind(h: HitSequence):
    """Independence likelihood ratio, its p-value and the transition counts."""
    if len(h.hits) < 3:
        raise EmptySequence("need at least 3 observations")
    c = transition_counts(h.hits)
    stat = ind_statistic(c)
    return stat, chi2_sf1(stat), c


def evaluate(h: HitSequence) -> BacktestReport:
    """Run both tests and bundle the results."""
    pof_stat, pof_p = kupiec_pof(h)
    ind_stat, ind_p, counts = christoffersen_ind(h)
    alpha_hat = float(h.hits.sum()) / len(h.hits)
    return BacktestReport(h.tail, h.alpha, alpha_hat, counts,
                          pof_stat, pof_p, ind_stat, ind_p)
