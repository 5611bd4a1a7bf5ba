"""Implied-volatility smile dynamics toolkit.

Decomposes the daily dynamics of swaption vol smiles and surfaces into
orthogonal functional modes, forecasts projection quantiles by filtered
historical simulation, reconstructs extreme smiles, verifies them against
normal-model no-arbitrage conditions, and backtests the resulting VaR.
"""

from . import backtest, bachelier, errors, fhs, kldecomp, synthmarket, volgrid

__version__ = "0.1.0"

__all__ = [
    "backtest",
    "bachelier",
    "errors",
    "fhs",
    "kldecomp",
    "synthmarket",
    "volgrid",
    "__version__",
]
