"""Seeded synthetic vol-cube generator with known decomposition ground truth.

Builds orthonormal modes on a grid, simulates per-mode projection series
(optionally autoregressive and with clustered conditional variance),
exponentiates the resulting log-return field onto a base smile, and emits
the same cube format the ingestion layer reads.  Identical seeds give
bit-identical output, which makes every downstream stage testable against
the generator's ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date as Date, timedelta

import numpy as np

from .errors import InputError, RankDeficiency
from .kldecomp import grid_weights
from .volgrid import VolCubeSeries

_BURN_IN = 200


@dataclass(frozen=True)
class SynthSpec:
    """Everything needed to rebuild a synthetic cube deterministically.

    ``vol_cluster`` in [0, 1) is the persistence of the log-variance of the
    projection innovations; 0 turns clustering off entirely.  ``lambdas``
    are the target mode variances of the generated log-return field.
    """

    grid_axes: tuple
    units: tuple
    lambdas: tuple
    base_smile: np.ndarray
    n_dates: int
    seed: int
    ar_betas: tuple = ()
    vol_cluster: float = 0.0
    expiry: float = 10.0
    tenor: float = 10.0
    start_date: Date = field(default=Date(2007, 1, 1))

    def __post_init__(self):
        object.__setattr__(self, "grid_axes",
                           tuple(np.asarray(g, dtype=float) for g in self.grid_axes))
        object.__setattr__(self, "lambdas", tuple(float(l) for l in self.lambdas))
        object.__setattr__(self, "base_smile", np.asarray(self.base_smile, dtype=float))
        betas = tuple(float(b) for b in self.ar_betas)
        if len(betas) < len(self.lambdas):
            betas = betas + (0.0,) * (len(self.lambdas) - len(betas))
        object.__setattr__(self, "ar_betas", betas)
        if any(l2 > l1 for l1, l2 in zip(self.lambdas, self.lambdas[1:])):
            raise InputError("lambdas must be non-increasing")
        if any(l <= 0 for l in self.lambdas):
            raise InputError("lambdas must be strictly positive")
        if not 0.0 <= self.vol_cluster < 1.0:
            raise InputError("vol_cluster must lie in [0, 1)")
        if any(abs(b) >= 1.0 for b in self.ar_betas):
            raise InputError("AR coefficients must satisfy |beta| < 1")
        npts = int(np.prod([len(g) for g in self.grid_axes]))
        if len(self.lambdas) > npts:
            raise InputError("more modes than grid points")
        if self.base_smile.shape != tuple(len(g) for g in self.grid_axes):
            raise InputError("base smile must be sampled on the grid")
        if np.any(self.base_smile <= 0):
            raise InputError("base smile must be strictly positive")
        if self.n_dates < 2:
            raise InputError("need at least 2 dates")

    @property
    def n_modes(self) -> int:
        return len(self.lambdas)


def make_orthonormal_modes(grid_axes, r: int) -> np.ndarray:
    """Gram-Schmidt on monomials under the trapezoid inner product.

    Returns mode samples on the flattened grid, one column per mode,
    orthonormal to 1e-10.  The first mode is the normalized positive
    constant; later modes follow increasing polynomial degree (graded by
    total degree in 2-D).
    """
    grid_axes = tuple(np.asarray(g, dtype=float) for g in grid_axes)
    npts = int(np.prod([len(g) for g in grid_axes]))
    if r > npts:
        raise RankDeficiency(f"cannot build {r} modes on {npts} grid points")
    w = grid_weights(grid_axes)

    if len(grid_axes) == 1:
        x = grid_axes[0]
        raw = [x ** k for k in range(r)]
    else:
        x1, x2 = np.meshgrid(grid_axes[0], grid_axes[1], indexing="ij")
        x1, x2 = x1.ravel(), x2.ravel()
        raw = []
        total = 0
        while len(raw) < r:
            for i in range(total + 1):
                raw.append(x1 ** (total - i) * x2 ** i)
                if len(raw) == r:
                    break
            total += 1

    def dot(u, v):
        return float(np.dot(w, u * v))

    modes = []
    for k, cand in enumerate(raw):
        v = cand.astype(float)
        for _ in range(2):  # re-orthogonalize for 1e-10 quality
            for m in modes:
                v = v - dot(v, m) * m
        norm = np.sqrt(dot(v, v))
        if norm <= 1e-12 * max(np.sqrt(dot(cand, cand)), 1.0):
            raise RankDeficiency(f"monomial {k} is dependent on earlier modes on this grid")
        v = v / norm
        integral = dot(v, np.ones_like(v))
        if integral < -1e-10 or (abs(integral) <= 1e-10 and v[np.argmax(np.abs(v) > 1e-10)] < 0):
            v = -v
        modes.append(v)
    return np.column_stack(modes)


def simulate_projections(spec: SynthSpec) -> np.ndarray:
    """Per-mode projection series, shape (n_dates - 1, n_modes).

    Each mode follows xi(t) = beta xi(t-1) + s(t) z(t) with iid standard
    normal z and a log-variance AR(1) for s^2 whose persistence is
    ``vol_cluster`` (noise scale proportional to it, so 0 degenerates to an
    iid unit normal stream).  Streams are drawn independently per mode and
    rescaled ex post to unit sample variance.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_dates - 1
    out = np.empty((n, spec.n_modes))
    c = spec.vol_cluster
    noise_scale = 0.15 * c
    for m in range(spec.n_modes):
        beta = spec.ar_betas[m]
        z = rng.standard_normal(n + _BURN_IN)
        wvol = rng.standard_normal(n + _BURN_IN)
        logvar = 0.0
        xi = 0.0
        series = np.empty(n + _BURN_IN)
        for t in range(n + _BURN_IN):
            logvar = c * logvar + noise_scale * wvol[t]
            xi = beta * xi + np.exp(0.5 * logvar) * z[t]
            series[t] = xi
        series = series[_BURN_IN:]
        out[:, m] = series / np.std(series)
    return out


def synthesize_cube(spec: SynthSpec, modes: np.ndarray | None = None,
                    xi: np.ndarray | None = None) -> VolCubeSeries:
    """Exponentiate the mode expansion onto the base smile, day by day:

        I(t, x) = I(t-1, x) * exp(sum_i sqrt(lambda_i) xi_i(t) e_i(x))

    with I(0, .) the base smile.  The result is emitted as a single
    expiry/tenor cube when the grid is the moneyness axis, or as a full
    expiry x tenor lattice at moneyness 0 for 2-D grids.
    """
    if modes is None:
        modes = make_orthonormal_modes(spec.grid_axes, spec.n_modes)
    if xi is None:
        xi = simulate_projections(spec)
    if modes.shape[1] != spec.n_modes or xi.shape[1] != spec.n_modes:
        raise InputError("modes/projections do not match the spec mode count")
    if xi.shape[0] != spec.n_dates - 1:
        raise InputError("need one projection row per return date")

    scale = np.sqrt(np.asarray(spec.lambdas))
    returns = (xi * scale) @ modes.T  # (n_dates-1, npts)
    log_levels = np.concatenate([
        np.zeros((1, returns.shape[1])),
        np.cumsum(returns, axis=0),
    ])
    levels = np.log(spec.base_smile.ravel()) + log_levels
    samples = np.exp(levels)

    dates = tuple(spec.start_date + timedelta(days=i) for i in range(spec.n_dates))
    if len(spec.grid_axes) == 1:
        vols = samples.reshape(spec.n_dates, -1, 1, 1)
        return VolCubeSeries(dates, spec.grid_axes[0],
                             np.array([spec.expiry]), np.array([spec.tenor]), vols)
    n1, n2 = (len(g) for g in spec.grid_axes)
    vols = samples.reshape(spec.n_dates, 1, n1, n2)
    return VolCubeSeries(dates, np.array([0.0]), spec.grid_axes[0], spec.grid_axes[1], vols)


def default_base_smile(moneyness: np.ndarray, atm_vol: float = 0.006) -> np.ndarray:
    """Gently skewed and convex smile used as the generator default."""
    m = np.asarray(moneyness, dtype=float)
    return atm_vol + 0.015 * m + 0.6 * m * m
