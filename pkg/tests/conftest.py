"""Shared fixtures: synthetic market scenarios reused across test modules."""

import time
from dataclasses import dataclass, field

import numpy as np
import pytest

from voldyn import backtest as bt
from voldyn import bachelier, fhs, kldecomp, synthmarket, volgrid

_ACCEPTANCE_RESULTS = []


@pytest.fixture
def acceptance_record():
    """Record one acceptance criterion outcome and assert it."""
    def record(num, title, ok, detail=""):
        _ACCEPTANCE_RESULTS.append((num, title, bool(ok), detail))
        assert ok, f"criterion {num} ({title}): {detail}"
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail in sorted(_ACCEPTANCE_RESULTS):
        status = "PASS" if ok else "FAIL"
        line = f"criterion {num} {status} - {title}"
        if detail:
            line += f" [{detail}]"
        terminalreporter.write_line(line)


# ---------------------------------------------------------------------------
# Desk-scale synthetic market (realistic variances, clustered, AR mode 1)
# ---------------------------------------------------------------------------

DESK_GRID = np.linspace(-0.02, 0.02, 21)
DESK_LAMBDAS = (1.8e-5, 1.8e-7, 2e-8)
DESK_SEED = 42
DESK_FORWARD = 0.02
DESK_EXPIRY = 10.0


@dataclass
class DeskScenario:
    spec: synthmarket.SynthSpec
    cube: volgrid.VolCubeSeries
    smile: volgrid.FieldSeries
    rf: volgrid.ReturnField
    model: kldecomp.KLModel
    proj: kldecomp.ProjectionSeries
    fhs_cfg: fhs.FhsConfig
    forecasts: list
    forecast_dates: tuple
    build_seconds: float
    _extremes: dict = field(default_factory=dict)

    def realized_residuals(self, mode):
        fc = self.forecasts[mode]
        idx = {d: i for i, d in enumerate(fc.residuals.dates)}
        rq = fc.residual_quantiles
        values = np.array([fc.residuals.values[idx[d]] for d in rq.dates])
        return fhs.ScalarSeries(rq.dates, values)

    def extreme_smiles(self, alpha):
        """Extreme smile per forecast date, cached per level."""
        if alpha not in self._extremes:
            idx = {d: i for i, d in enumerate(self.smile.dates)}
            out = np.empty((len(self.forecast_dates),) + self.model.grid_shape)
            for row, d in enumerate(self.forecast_dates):
                xi_hat = fhs.scenario_xi(self.forecasts, self.fhs_cfg, d, alpha)
                out[row] = fhs.extreme_field(self.model, xi_hat,
                                             self.smile.values[idx[d] - 1])
            self._extremes[alpha] = out
        return self._extremes[alpha]


@pytest.fixture(scope="session")
def desk() -> DeskScenario:
    t0 = time.time()
    spec = synthmarket.SynthSpec(
        grid_axes=(DESK_GRID,),
        units=("moneyness",),
        lambdas=DESK_LAMBDAS,
        base_smile=synthmarket.default_base_smile(DESK_GRID),
        n_dates=2500,
        seed=DESK_SEED,
        ar_betas=(0.18, 0.0, 0.0),
        vol_cluster=0.99,
    )
    cube = synthmarket.synthesize_cube(spec)
    smile = volgrid.extract_slice(
        cube, volgrid.SliceSpec("moneyness", {"expiry": 10.0, "tenor": 10.0}))
    rf = volgrid.center(volgrid.log_returns(smile))
    model = kldecomp.decompose(rf, n_modes=3)
    proj = kldecomp.project(rf, model)
    cfg = fhs.FhsConfig()
    forecasts = fhs.forecast_modes(proj.dates, proj.values, cfg)
    common = set(forecasts[0].xi_quantiles.dates)
    for fc in forecasts[1:]:
        common &= set(fc.xi_quantiles.dates)
    return DeskScenario(spec, cube, smile, rf, model, proj, cfg, forecasts,
                        tuple(sorted(common)), time.time() - t0)


# ---------------------------------------------------------------------------
# Closure scenario: large eigenvalues with known shares (0.9, 0.09, 0.01)
# ---------------------------------------------------------------------------

CLOSURE_GRID = np.linspace(0.0, 30.0, 31)
CLOSURE_LAMBDAS = (9.0, 0.9, 0.1)


@dataclass
class ClosureScenario:
    spec: synthmarket.SynthSpec
    true_modes: np.ndarray
    rf: volgrid.ReturnField
    model: kldecomp.KLModel
    proj: kldecomp.ProjectionSeries
    build_seconds: float


@pytest.fixture(scope="session")
def closure() -> ClosureScenario:
    t0 = time.time()
    spec = synthmarket.SynthSpec(
        grid_axes=(CLOSURE_GRID,),
        units=("moneyness",),
        lambdas=CLOSURE_LAMBDAS,
        base_smile=np.full(len(CLOSURE_GRID), 0.006),
        n_dates=2500,
        seed=DESK_SEED,
    )
    true_modes = synthmarket.make_orthonormal_modes(spec.grid_axes, spec.n_modes)
    cube = synthmarket.synthesize_cube(spec, true_modes)
    smile = volgrid.extract_slice(
        cube, volgrid.SliceSpec("moneyness", {"expiry": 10.0, "tenor": 10.0}))
    rf = volgrid.center(volgrid.log_returns(smile))
    model = kldecomp.decompose(rf, n_modes=3)
    proj = kldecomp.project(rf, model)
    return ClosureScenario(spec, true_modes, rf, model, proj, time.time() - t0)
