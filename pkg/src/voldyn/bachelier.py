"""Normal-model payer swaption pricing and no-arbitrage curve checks.

Prices are quoted under a unit annuity: C = (f - k) Phi(d) + s sqrt(T) phi(d)
with d = (f - k) / (s sqrt(T)).  Forwards and strikes may be negative.  A
call price curve over strikes must be non-increasing and convex; the checks
use divided differences with a small tolerance in price units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NegativeVol, NonPositiveExpiry, TooFewStrikes

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

DEFAULT_ARB_TOL = 1e-10


@dataclass(frozen=True)
class SwaptionSpec:
    """Contract metadata; the annuity is normalized to 1."""

    expiry: float
    tenor: float
    payer: bool = True

    def __post_init__(self):
        if self.expiry <= 0:
            raise NonPositiveExpiry("expiry must be positive")


@dataclass(frozen=True)
class PriceCurve:
    """Present values over a strictly increasing strike ladder."""

    strikes: np.ndarray
    prices: np.ndarray

    def __post_init__(self):
        strikes = np.asarray(self.strikes, dtype=float)
        prices = np.asarray(self.prices, dtype=float)
        object.__setattr__(self, "strikes", strikes)
        object.__setattr__(self, "prices", prices)
        if strikes.shape != prices.shape or strikes.ndim != 1:
            raise InputError("strikes and prices must be 1-D and equally long")
        if np.any(np.diff(strikes) <= 0):
            raise InputError("strikes must be strictly increasing")


@dataclass(frozen=True)
class ArbitrageReport:
    """Outcome of the monotonicity/convexity check on one price curve."""

    monotone_ok: bool
    convex_ok: bool
    violations: tuple  # (index, kind) pairs

    @property
    def ok(self) -> bool:
        return self.monotone_ok and self.convex_ok


def norm_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x / _SQRT2)


def norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) * _INV_SQRT_2PI


def price(forward: float, strike: float, vol: float, expiry: float) -> float:
    """Payer swaption (call on the rate) present value under a unit annuity."""
    if vol < 0:
        raise NegativeVol("vol must be non-negative")
    if expiry <= 0:
        raise NonPositiveExpiry("expiry must be positive")
    stdev = vol * math.sqrt(expiry)
    intrinsic = forward - strike
    if stdev == 0.0:
        return max(intrinsic, 0.0)
    d = intrinsic / stdev
    return intrinsic * norm_cdf(d) + stdev * norm_pdf(d)


def vega(forward: float, strike: float, vol: float, expiry: float) -> float:
    """dPrice/dVol = sqrt(T) phi(d); strictly positive for vol > 0."""
    if vol < 0:
        raise NegativeVol("vol must be non-negative")
    if expiry <= 0:
        raise NonPositiveExpiry("expiry must be positive")
    stdev = vol * math.sqrt(expiry)
    if stdev == 0.0:
        return 0.0
    d = (forward - strike) / stdev
    return math.sqrt(expiry) * norm_pdf(d)


def price_curve(forward: float, strikes, moneyness_grid, smile, expiry: float) -> PriceCurve:
    """Price a strike ladder with the strike-dependent vol smile(k - f).

    The smile is linearly interpolated in moneyness and clamped flat beyond
    the grid, which cannot manufacture arbitrage from extrapolated slopes.
    """
    strikes = np.asarray(strikes, dtype=float)
    grid = np.asarray(moneyness_grid, dtype=float)
    smile = np.asarray(smile, dtype=float)
    vols = np.interp(strikes - forward, grid, smile)
    prices = np.array([price(forward, k, s, expiry) for k, s in zip(strikes, vols)])
    return PriceCurve(strikes, prices)


def check_no_arbitrage(curve: PriceCurve, tol: float = DEFAULT_ARB_TOL) -> ArbitrageReport:
    """Check the call curve is non-increasing and convex in strike.

    First divided differences must not exceed +tol and second divided
    differences must not fall below -tol; every violating index is reported,
    using the left index of the offending slope for monotonicity and the
    central index for convexity.
    """
    k = curve.strikes
    p = curve.prices
    if len(k) < 3:
        raise TooFewStrikes("need at least 3 strikes")
    slopes = np.diff(p) / np.diff(k)
    violations = []
    mono_bad = np.nonzero(slopes > tol)[0]
    for i in mono_bad:
        violations.append((int(i), "monotonicity"))
    curvature = (slopes[1:] - slopes[:-1]) / (k[2:] - k[:-2])
    conv_bad = np.nonzero(curvature < -tol)[0]
    for i in conv_bad:
        violations.append((int(i) + 1, "convexity"))
    return ArbitrageReport(len(mono_bad) == 0, len(conv_bad) == 0, tuple(violations))
