"""Filtered historical simulation on projection series.

The filtration removes the conditional mean with an AR(1) fit and the
conditional variance with an EWMA estimate,

    sigma^2(t) = theta sigma^2(t-1) + (1 - theta) X^2(t-1),

applies a rolling empirical quantile to the devolatized residuals, and
revolatizes to obtain per-date residual quantiles.  Mode quantiles combine
into extreme smile scenarios through the truncated mode expansion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date as Date

import numpy as np

from .errors import (
    DateMisalignment,
    InputError,
    InsufficientHistory,
    MissingLastSmile,
    NonStationaryFit,
    SeriesTooShort,
)
from .kldecomp import KLModel, reconstruct
from .volgrid import _readonly

RECONSTRUCTION_MULTIPLICATIVE = "multiplicative"
RECONSTRUCTION_ADDITIVE_PAPER = "additive-paper"


# ---------------------------------------------------------------------------
# Series containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarSeries:
    """A dated scalar time series."""

    dates: tuple[Date, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        if self.values.ndim != 1 or len(self.values) != len(self.dates):
            raise InputError("series needs one value per date")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class QuantileSeries:
    """Forecast quantiles per date, one column per level in ``alphas``."""

    dates: tuple[Date, ...]
    alphas: tuple[float, ...]
    values: np.ndarray  # shape (n_dates, n_alphas)

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        if self.values.shape != (len(self.dates), len(self.alphas)):
            raise InputError("quantile values must be (n_dates, n_alphas)")
        order = np.argsort(self.alphas)
        sorted_vals = self.values[:, order]
        if np.any(np.diff(sorted_vals, axis=1) < 0):
            raise InputError("quantiles must be non-decreasing in alpha at every date")

    def level(self, alpha: float) -> np.ndarray:
        for i, a in enumerate(self.alphas):
            if a == alpha:
                return self.values[:, i]
        raise InputError(f"quantile level {alpha} not present")


@dataclass(frozen=True)
class ArModel:
    """First-order autoregression fit, x(t) = beta x(t-1) + eps(t)."""

    beta: float
    fitted_on: str = ""

    def __post_init__(self):
        if not abs(self.beta) < 1.0:
            raise NonStationaryFit(f"|beta| = {abs(self.beta)} >= 1")


@dataclass(frozen=True)
class EwmaParams:
    """EWMA decay and seed window length."""

    theta: float = 0.9
    window: int = 60

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise InputError("theta must lie in (0, 1)")
        if self.window < 2:
            raise InputError("window must be at least 2")


@dataclass(frozen=True)
class FhsConfig:
    """Knobs of the simulation: window, levels, per-mode filtration choices.

    ``use_ar`` toggles the AR(1) conditional-mean stage per mode (default:
    on for the first mode only).  ``signs`` picks the tail per mode when a
    combined scenario at level alpha is assembled: ``same`` uses alpha,
    ``flip`` uses 1 - alpha.
    """

    window: int = 250
    alphas: tuple[float, ...] = (0.01, 0.99)
    ewma: EwmaParams = field(default_factory=EwmaParams)
    use_ar: tuple[bool, ...] = (True, False, False)
    signs: tuple[str, ...] = ("same", "same", "same")
    reconstruction: str = RECONSTRUCTION_MULTIPLICATIVE

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(sorted(float(a) for a in self.alphas)))
        if any(not 0.0 < a < 1.0 for a in self.alphas):
            raise InputError("quantile levels must lie in (0, 1)")
        if self.window < 1:
            raise InputError("historical window must be positive")
        if any(s not in ("same", "flip") for s in self.signs):
            raise InputError("signs must be 'same' or 'flip'")
        if self.reconstruction not in (RECONSTRUCTION_MULTIPLICATIVE,
                                       RECONSTRUCTION_ADDITIVE_PAPER):
            raise InputError(f"unknown reconstruction {self.reconstruction!r}")

    def use_ar_for(self, mode: int) -> bool:
        return self.use_ar[mode] if mode < len(self.use_ar) else False

    def sign_for(self, mode: int) -> str:
        return self.signs[mode] if mode < len(self.signs) else "same"

    def scenario_alpha(self, mode: int, alpha: float) -> float:
        return alpha if self.sign_for(mode) == "same" else 1.0 - alpha


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

def acf(series, max_lag: int) -> np.ndarray:
    """Sample autocorrelations for lags 1..max_lag."""
    x = np.asarray(series, dtype=float)
    n = len(x)
    if n <= max_lag + 1:
        raise SeriesTooShort(f"need more than {max_lag + 1} observations")
    x = x - x.mean()
    gamma0 = float(np.dot(x, x)) / n
    if gamma0 == 0.0:
        raise SeriesTooShort("series is constant; autocorrelation undefined")
    out = np.empty(max_lag)
    for k in range(1, max_lag + 1):
        out[k - 1] = float(np.dot(x[k:], x[:-k])) / n / gamma0
    return out


def pacf(series, max_lag: int) -> np.ndarray:
    """Partial autocorrelations for lags 1..max_lag via Durbin-Levinson."""
    rho = acf(series, max_lag)
    out = np.empty(max_lag)
    phi_prev = np.empty(0)
    for m in range(1, max_lag + 1):
        if m == 1:
            phi_mm = rho[0]
            phi = np.array([phi_mm])
        else:
            num = rho[m - 1] - float(np.dot(phi_prev, rho[m - 2::-1]))
            den = 1.0 - float(np.dot(phi_prev, rho[:m - 1]))
            phi_mm = num / den
            phi = np.empty(m)
            phi[:-1] = phi_prev - phi_mm * phi_prev[::-1]
            phi[-1] = phi_mm
        out[m - 1] = phi_mm
        phi_prev = phi
    return out


# ---------------------------------------------------------------------------
# Conditional mean and variance
# ---------------------------------------------------------------------------

def fit_ar1(series, name: str = "") -> ArModel:
    """No-intercept least squares: beta = sum x(t) x(t-1) / sum x(t-1)^2."""
    x = np.asarray(series, dtype=float)
    if len(x) < 10:
        raise SeriesTooShort("need at least 10 observations for an AR(1) fit")
    denom = float(np.dot(x[:-1], x[:-1]))
    if denom == 0.0:
        raise SeriesTooShort("series has no variation before the last observation")
    beta = float(np.dot(x[1:], x[:-1])) / denom
    if not abs(beta) < 1.0:
        raise NonStationaryFit(f"fitted beta {beta} is not stationary")
    return ArModel(beta, fitted_on=name)


def ar_residuals(series: ScalarSeries, model: ArModel | None) -> ScalarSeries:
    """eps(t) = x(t) - beta x(t-1) from the second observation on.

    With no model the series passes through unchanged (no mean filtration).
    """
    if model is None:
        return series
    x = series.values
    eps = x[1:] - model.beta * x[:-1]
    return ScalarSeries(series.dates[1:], eps)


def ewma_vol(series: ScalarSeries, params: EwmaParams,
             seed: float | None = None) -> ScalarSeries:
    """Conditional volatility via the EWMA recursion.

    The recursion is seeded with the mean of the first ``window`` squared
    observations (overridable for testing) and produces output from that
    point on, floored at 1e-12 times the seed.
    """
    x = series.values
    w = params.window
    if len(x) <= w:
        raise SeriesTooShort(f"need more than window={w} observations")
    if seed is None:
        seed = float(np.mean(x[:w] ** 2))
    floor = 1e-12 * seed
    var = np.empty(len(x) - w)
    v = max(seed, floor)
    var[0] = v
    for i in range(1, len(var)):
        v = params.theta * v + (1.0 - params.theta) * x[w + i - 1] ** 2
        var[i] = max(v, floor)
    return ScalarSeries(series.dates[w:], np.sqrt(var))


# ---------------------------------------------------------------------------
# Rolling quantiles
# ---------------------------------------------------------------------------

def _window_quantile(sorted_window: np.ndarray, alpha: float) -> float:
    """(L+1) plotting-position quantile with linear interpolation.

    Positions below 1/(L+1) or above L/(L+1) clamp to the extreme order
    statistics.
    """
    length = len(sorted_window)
    p = alpha * (length + 1)
    if p <= 1.0:
        return float(sorted_window[0])
    if p >= length:
        return float(sorted_window[-1])
    k = int(math.floor(p))
    frac = p - k
    return float(sorted_window[k - 1] + frac * (sorted_window[k] - sorted_window[k - 1]))


def rolling_quantile(series: ScalarSeries, window: int, alphas) -> QuantileSeries:
    """Empirical quantiles of the previous ``window`` values at each date.

    The forecast at date t uses observations t-window .. t-1 only, so it is
    available from the (window+1)-th date of the input on.
    """
    alphas = tuple(float(a) for a in np.atleast_1d(alphas))
    x = series.values
    if len(x) <= window:
        raise InsufficientHistory(f"need more than window={window} observations")
    n_out = len(x) - window
    out = np.empty((n_out, len(alphas)))
    for i in range(n_out):
        sw = np.sort(x[i:i + window])
        for j, a in enumerate(alphas):
            out[i, j] = _window_quantile(sw, a)
    return QuantileSeries(series.dates[window:], alphas, out)


def forecast_residual_quantile(devol: ScalarSeries, vol: ScalarSeries,
                               window: int, alphas) -> QuantileSeries:
    """Rolling quantiles of eps/sigma, revolatized by the same-date sigma."""
    if devol.dates != vol.dates:
        raise DateMisalignment("devolatized residuals and vol series differ in dates")
    rq = rolling_quantile(devol, window, alphas)
    sigma = vol.values[window:]
    return QuantileSeries(rq.dates, rq.alphas, rq.values * sigma[:, None])


def forecast_xi_quantile(xi: ScalarSeries, model: ArModel | None,
                         resid_q: QuantileSeries) -> QuantileSeries:
    """Shift residual quantiles by the AR(1) conditional mean, beta xi(t-1)."""
    if model is None or model.beta == 0.0:
        return resid_q
    index = {d: i for i, d in enumerate(xi.dates)}
    shift = np.empty(len(resid_q.dates))
    for row, d in enumerate(resid_q.dates):
        i = index.get(d)
        if i is None or i == 0:
            raise DateMisalignment(f"no prior observation of xi for forecast date {d}")
        shift[row] = model.beta * xi.values[i - 1]
    return QuantileSeries(resid_q.dates, resid_q.alphas,
                          resid_q.values + shift[:, None])


# ---------------------------------------------------------------------------
# Per-mode pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeForecast:
    """All intermediate series of one mode's filtration."""

    mode: int
    ar: ArModel | None
    residuals: ScalarSeries
    vol: ScalarSeries
    devol: ScalarSeries
    residual_quantiles: QuantileSeries
    xi_quantiles: QuantileSeries


def filter_mode(xi: ScalarSeries, config: FhsConfig, mode: int) -> ModeForecast:
    """Run the full filtration for one projection series."""
    ar = fit_ar1(xi.values, name=f"xi_{mode + 1}") if config.use_ar_for(mode) else None
    eps = ar_residuals(xi, ar)
    vol = ewma_vol(eps, config.ewma)
    aligned = ScalarSeries(vol.dates, eps.values[len(eps) - len(vol):])
    devol = ScalarSeries(vol.dates, aligned.values / vol.values)
    resid_q = forecast_residual_quantile(devol, vol, config.window, config.alphas)
    xi_q = forecast_xi_quantile(xi, ar, resid_q)
    return ModeForecast(mode, ar, eps, vol, devol, resid_q, xi_q)


def forecast_modes(dates, xi_matrix: np.ndarray, config: FhsConfig) -> list[ModeForecast]:
    """Independent filtration per mode (modes are uncorrelated by design)."""
    return [filter_mode(ScalarSeries(tuple(dates), xi_matrix[:, m]), config, m)
            for m in range(xi_matrix.shape[1])]


# ---------------------------------------------------------------------------
# Extreme smiles and P&L
# ---------------------------------------------------------------------------

def extreme_field(model: KLModel, xi_hat, last_smile: np.ndarray,
                  reconstruction: str = RECONSTRUCTION_MULTIPLICATIVE) -> np.ndarray:
    """Extreme smile from per-mode quantile values of the projections.

    The log-return scenario is u_hat = sum_i sqrt(lambda_i) xi_hat_i e_i(x)
    plus the stored mean function; the default reconstruction multiplies the
    previous smile by exp(u_hat), consistent with log-return dynamics.  The
    ``additive-paper`` variant adds exp(u_hat) to the previous smile instead.
    """
    xi_hat = np.asarray(xi_hat, dtype=float)
    if last_smile is None:
        raise MissingLastSmile("previous-date smile is required")
    last_smile = np.asarray(last_smile, dtype=float)
    if last_smile.shape != model.grid_shape:
        raise MissingLastSmile(f"smile shape {last_smile.shape} != grid {model.grid_shape}")
    u_hat = reconstruct(model, xi_hat, len(xi_hat)) + model.mean_function
    if reconstruction == RECONSTRUCTION_MULTIPLICATIVE:
        return last_smile * np.exp(u_hat)
    if reconstruction == RECONSTRUCTION_ADDITIVE_PAPER:
        return last_smile + np.exp(u_hat)
    raise InputError(f"unknown reconstruction {reconstruction!r}")


def scenario_xi(forecasts: list[ModeForecast], config: FhsConfig,
                date: Date, alpha: float) -> np.ndarray:
    """Per-mode quantile values for the combined scenario at one date."""
    out = np.empty(len(forecasts))
    for m, fc in enumerate(forecasts):
        level = config.scenario_alpha(m, alpha)
        try:
            row = fc.xi_quantiles.dates.index(date)
        except ValueError:
            raise DateMisalignment(f"mode {m + 1} has no forecast for {date}") from None
        out[m] = fc.xi_quantiles.level(level)[row]
    return out


def interp_smile(moneyness_grid: np.ndarray, smile: np.ndarray, m: float) -> float:
    """Linear interpolation in moneyness, clamped flat beyond the grid."""
    return float(np.interp(m, moneyness_grid, smile))


def var_pnl(price_fn, forward: float, strike: float, expiry: float,
            moneyness_grid: np.ndarray, extreme_smile: np.ndarray,
            prev_smile: np.ndarray) -> float:
    """Vega-only P&L of re-pricing one swaption under the extreme smile.

    The forward is frozen at its previous-date value, so the price move is
    driven purely by the vol move at moneyness strike - forward.
    """
    m = strike - forward
    vol_new = interp_smile(moneyness_grid, extreme_smile, m)
    vol_old = interp_smile(moneyness_grid, prev_smile, m)
    return price_fn(forward, strike, vol_new, expiry) - price_fn(forward, strike, vol_old, expiry)
