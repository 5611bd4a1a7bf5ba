"""Generator ground truth: orthonormal modes, projections, cube synthesis."""

import numpy as np
import pytest

from voldyn import fhs, kldecomp, synthmarket, volgrid
from voldyn.errors import InputError, RankDeficiency


def _spec(**overrides):
    grid = np.linspace(-0.02, 0.02, 21)
    defaults = dict(
        grid_axes=(grid,),
        units=("moneyness",),
        lambdas=(1.8e-5, 1.8e-7),
        base_smile=synthmarket.default_base_smile(grid),
        n_dates=400,
        seed=11,
    )
    defaults.update(overrides)
    return synthmarket.SynthSpec(**defaults)


class TestOrthonormalModes:
    def test_first_mode_is_normalized_constant(self):
        grid = np.linspace(1.0, 5.0, 17)
        modes = synthmarket.make_orthonormal_modes((grid,), 1)
        assert modes[:, 0] == pytest.approx(1.0 / 2.0, abs=1e-12)  # 1/sqrt(4)

    def test_second_mode_is_scaled_linear(self):
        # normalized P1 up to the deterministic sign rule (zero integral
        # falls back to positive-at-leftmost-point, flipping the slope)
        grid = np.linspace(-1.0, 1.0, 801)
        modes = synthmarket.make_orthonormal_modes((grid,), 2)
        expected = np.sqrt(1.5) * grid
        err = min(np.max(np.abs(modes[:, 1] - expected)),
                  np.max(np.abs(modes[:, 1] + expected)))
        assert err < 1e-3

    def test_orthonormality(self):
        grid = np.linspace(0.0, 30.0, 31)
        modes = synthmarket.make_orthonormal_modes((grid,), 4)
        w = kldecomp.grid_weights((grid,))
        gram = modes.T @ (modes * w[:, None])
        assert np.max(np.abs(gram - np.eye(4))) < 1e-10

    def test_two_dimensional_modes(self):
        axes = (np.linspace(1.0, 10.0, 9), np.linspace(2.0, 8.0, 7))
        modes = synthmarket.make_orthonormal_modes(axes, 3)
        w = kldecomp.grid_weights(axes)
        gram = modes.T @ (modes * w[:, None])
        assert np.max(np.abs(gram - np.eye(3))) < 1e-10

    def test_rank_deficiency(self):
        with pytest.raises(RankDeficiency):
            synthmarket.make_orthonormal_modes((np.array([0.0, 1.0]),), 3)


class TestSimulateProjections:
    def test_unit_variance_after_rescale(self):
        xi = synthmarket.simulate_projections(_spec(vol_cluster=0.0))
        assert np.var(xi, axis=0) == pytest.approx(1.0, abs=1e-12)

    def test_iid_when_clustering_off(self):
        xi = synthmarket.simulate_projections(
            _spec(n_dates=10001, vol_cluster=0.0, ar_betas=(0.0, 0.0)))
        for m in range(xi.shape[1]):
            rho = fhs.acf(xi[:, m], 10)
            assert np.max(np.abs(rho)) < 3.0 / np.sqrt(len(xi))

    def test_ar_coefficient_recovered(self):
        xi = synthmarket.simulate_projections(
            _spec(n_dates=5001, ar_betas=(0.18, 0.0)))
        beta = fhs.fit_ar1(xi[:, 0]).beta
        assert beta == pytest.approx(0.18, abs=0.03)

    def test_determinism(self):
        a = synthmarket.simulate_projections(_spec(vol_cluster=0.7))
        b = synthmarket.simulate_projections(_spec(vol_cluster=0.7))
        assert np.array_equal(a, b)

    def test_modes_independent_streams(self):
        xi = synthmarket.simulate_projections(_spec(n_dates=4001))
        corr = np.corrcoef(xi.T)[0, 1]
        assert abs(corr) < 0.05


class TestSynthesizeCube:
    def test_zero_projections_give_constant_cube(self):
        spec = _spec()
        modes = synthmarket.make_orthonormal_modes(spec.grid_axes, spec.n_modes)
        xi = np.zeros((spec.n_dates - 1, spec.n_modes))
        cube = synthmarket.synthesize_cube(spec, modes, xi)
        assert np.max(np.abs(cube.vols[:, :, 0, 0] - spec.base_smile)) < 1e-16

    def test_log_returns_invert_construction(self):
        spec = _spec()
        modes = synthmarket.make_orthonormal_modes(spec.grid_axes, spec.n_modes)
        xi = synthmarket.simulate_projections(spec)
        cube = synthmarket.synthesize_cube(spec, modes, xi)
        fs = volgrid.extract_slice(
            cube, volgrid.SliceSpec("moneyness", {"expiry": 10.0, "tenor": 10.0}))
        rets = volgrid.log_returns(fs)
        expected = (xi * np.sqrt(spec.lambdas)) @ modes.T
        assert np.max(np.abs(rets.values - expected)) < 1e-12

    def test_cube_determinism(self):
        a = synthmarket.synthesize_cube(_spec(vol_cluster=0.5))
        b = synthmarket.synthesize_cube(_spec(vol_cluster=0.5))
        assert np.array_equal(a.vols, b.vols)
        assert a.dates == b.dates

    def test_strictly_positive(self):
        cube = synthmarket.synthesize_cube(_spec(n_dates=2000))
        assert np.all(cube.vols > 0)

    def test_two_dimensional_cube(self):
        axes = (np.linspace(1.0, 10.0, 9), np.linspace(2.0, 8.0, 7))
        spec = synthmarket.SynthSpec(
            grid_axes=axes, units=("expiry_years", "tenor_years"),
            lambdas=(4.0, 1.0), base_smile=np.full((9, 7), 0.006),
            n_dates=300, seed=3)
        cube = synthmarket.synthesize_cube(spec)
        assert cube.vols.shape == (300, 1, 9, 7)
        assert np.array_equal(cube.expiry_grid, axes[0])

    def test_shape_validation(self):
        spec = _spec()
        modes = synthmarket.make_orthonormal_modes(spec.grid_axes, spec.n_modes)
        with pytest.raises(InputError):
            synthmarket.synthesize_cube(spec, modes, np.zeros((5, spec.n_modes)))


class TestSpecValidation:
    def test_lambda_ordering(self):
        with pytest.raises(InputError):
            _spec(lambdas=(1.0, 2.0))

    def test_vol_cluster_range(self):
        with pytest.raises(InputError):
            _spec(vol_cluster=1.0)

    def test_base_smile_positive(self):
        grid = np.linspace(-0.02, 0.02, 21)
        with pytest.raises(InputError):
            _spec(base_smile=np.zeros(21))

    def test_ar_stationarity(self):
        with pytest.raises(InputError):
            _spec(ar_betas=(1.0, 0.0))


def test_full_closure_small():
    """decompose(log_returns(synthesize(...))) recovers the generator truth."""
    grid = np.linspace(0.0, 30.0, 31)
    spec = synthmarket.SynthSpec(
        grid_axes=(grid,), units=("moneyness",), lambdas=(9.0, 0.9, 0.1),
        base_smile=np.full(31, 0.006), n_dates=2500, seed=6)
    true_modes = synthmarket.make_orthonormal_modes(spec.grid_axes, 3)
    cube = synthmarket.synthesize_cube(spec, true_modes)
    fs = volgrid.extract_slice(
        cube, volgrid.SliceSpec("moneyness", {"expiry": 10.0, "tenor": 10.0}))
    model = kldecomp.decompose(volgrid.center(volgrid.log_returns(fs)), n_modes=3)
    shares = kldecomp.explained_variance(model)
    assert shares == pytest.approx([0.9, 0.09, 0.01], abs=0.02)
    assert model.eigenvalues == pytest.approx([9.0, 0.9, 0.1], rel=0.05)
    w = kldecomp.grid_weights(model.grid_axes)
    for i in range(3):
        est = model.mode_values(i).ravel()
        err = min(np.sqrt(w @ (est - true_modes[:, i]) ** 2),
                  np.sqrt(w @ (est + true_modes[:, i]) ** 2))
        assert err < 0.05
