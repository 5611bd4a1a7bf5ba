"""Figure rendering for the report pipeline.

Every report-producing subcommand can drop PNG figures next to its CSV/JSON
output.  Rendering goes through the Agg backend and strips volatile PNG
metadata so reruns with identical inputs are byte-identical.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_RC = {
    "figure.figsize": (8.0, 4.8),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
}

_SAVE_KW = {"metadata": {"Software": None}, "bbox_inches": "tight"}


def _save(fig, path):
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_eigenfunctions(path, grid_axes, mode_values, shares):
    """Line plot (1-D) or filled-contour panels (2-D) of the leading modes."""
    with plt.rc_context(_RC):
        if len(grid_axes) == 1:
            fig, ax = plt.subplots()
            x = grid_axes[0]
            for i, (vals, share) in enumerate(zip(mode_values, shares)):
                ax.plot(x, vals, label=f"mode {i + 1} ({share:.2%})")
            ax.axhline(0.0, color="k", lw=0.6)
            ax.set_xlabel("grid")
            ax.set_ylabel("eigenfunction")
            ax.set_title("Leading covariance eigenfunctions")
            ax.legend()
        else:
            n = len(mode_values)
            fig, axes = plt.subplots(1, n, figsize=(4.0 * n, 3.4))
            axes = np.atleast_1d(axes)
            x1, x2 = np.meshgrid(grid_axes[0], grid_axes[1], indexing="ij")
            for i, (ax, vals, share) in enumerate(zip(axes, mode_values, shares)):
                cs = ax.contourf(x1, x2, vals, levels=15)
                fig.colorbar(cs, ax=ax, shrink=0.85)
                ax.set_title(f"mode {i + 1} ({share:.2%})")
                ax.set_xlabel("axis 1")
                ax.set_ylabel("axis 2")
        _save(fig, path)


def save_spectrum(path, lambdas, shares):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        idx = np.arange(1, len(lambdas) + 1)
        ax.bar(idx, shares)
        ax.set_xticks(idx)
        ax.set_xlabel("mode")
        ax.set_ylabel("explained variance share")
        ax.set_title("Eigenvalue spectrum (shares)")
        for i, (lam, s) in enumerate(zip(lambdas, shares)):
            ax.annotate(f"{lam:.3g}", (i + 1, s), ha="center", va="bottom", fontsize=7)
        _save(fig, path)


def save_projections(path, dates, xi):
    """Stacked per-mode projection time series."""
    n_modes = xi.shape[1]
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(n_modes, 1, sharex=True,
                                 figsize=(8.0, 1.9 * n_modes + 0.8))
        axes = np.atleast_1d(axes)
        for m, ax in enumerate(axes):
            ax.plot(dates, xi[:, m], lw=0.5)
            ax.set_ylabel(f"xi_{m + 1}")
        axes[-1].set_xlabel("date")
        axes[0].set_title("Projections on the leading modes")
        fig.autofmt_xdate()
        _save(fig, path)


def save_var_contour(path, dates, realized, q_low, q_high, label):
    """Realized series inside its forecast quantile contour."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(dates, realized, lw=0.4, color="0.3", label="realized")
        ax.plot(dates, q_low, lw=0.8, color="tab:red", label="lower quantile")
        ax.plot(dates, q_high, lw=0.8, color="tab:blue", label="upper quantile")
        ax.set_xlabel("date")
        ax.set_ylabel(label)
        ax.set_title("Forecast quantile contour")
        ax.legend()
        fig.autofmt_xdate()
        _save(fig, path)


def save_smiles(path, moneyness, prev_smile, extreme_smiles, date):
    """Previous-date smile against the reconstructed extreme scenarios."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(moneyness, prev_smile, "k-", lw=1.2, label="previous smile")
        for alpha, smile in sorted(extreme_smiles.items()):
            ax.plot(moneyness, smile, "--", lw=1.0, label=f"alpha={alpha:g}")
        ax.set_xlabel("moneyness")
        ax.set_ylabel("normal vol")
        ax.set_title(f"Extreme smile scenarios, {date}")
        ax.legend()
        _save(fig, path)


def save_price_curves(path, strikes, curves, date):
    """Swaption price ladders under the previous and extreme smiles."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for label, prices in curves.items():
            ax.plot(strikes, prices, marker=".", ms=3, lw=0.9, label=label)
        ax.set_xlabel("strike")
        ax.set_ylabel("price (unit annuity)")
        ax.set_title(f"Payer swaption price vs strike, {date}")
        ax.legend()
        _save(fig, path)


def save_hits(path, dates, hit_map):
    """Exceedance timelines, one row per (mode, tail)."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(8.0, 0.6 * len(hit_map) + 1.6))
        labels = []
        for row, (label, hits) in enumerate(sorted(hit_map.items())):
            idx = np.nonzero(hits)[0]
            ax.plot([dates[i] for i in idx], np.full(len(idx), row), "|",
                    ms=9, mew=1.2)
            labels.append(label)
        ax.set_yticks(range(len(labels)))
        ax.set_yticklabels(labels)
        ax.set_ylim(-0.7, len(labels) - 0.3)
        ax.set_xlabel("date")
        ax.set_title("VaR exceedances")
        fig.autofmt_xdate()
        _save(fig, path)
