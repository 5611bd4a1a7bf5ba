"""Cube ingestion, slicing and log-return behaviour."""

from datetime import date

import numpy as np
import pytest

from voldyn import volgrid
from voldyn.errors import (
    AlreadyCentered,
    DuplicateRow,
    MissingCell,
    NonPositiveValue,
    NonPositiveVol,
    OffGridCoordinate,
    TooFewDates,
    UnparseableRow,
)

CSV_2X3 = """date,expiry_years,tenor_years,moneyness,vol
2020-01-02,10,10,-0.01,0.0060
2020-01-02,10,10,0.0,0.0055
2020-01-02,10,10,0.01,0.0058
2020-01-03,10,10,-0.01,0.0061
2020-01-03,10,10,0.0,0.0056
2020-01-03,10,10,0.01,0.0059
"""


def _write(tmp_path, text, name="cube.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def _smile_series(values, start=date(2020, 1, 2)):
    from datetime import timedelta
    grid = np.linspace(-0.01, 0.01, values.shape[1])
    dates = tuple(start + timedelta(days=i) for i in range(values.shape[0]))
    return volgrid.FieldSeries(dates, (grid,), ("moneyness",), np.asarray(values, float))


class TestLoadCubeCsv:
    def test_identity_ingestion(self, tmp_path):
        cube = volgrid.load_cube_csv(_write(tmp_path, CSV_2X3))
        assert cube.vols.shape == (2, 3, 1, 1)
        assert cube.dates == (date(2020, 1, 2), date(2020, 1, 3))
        assert cube.vols[0, 0, 0, 0] == 0.0060
        assert cube.vols[1, 2, 0, 0] == 0.0059
        assert cube.forwards is None

    def test_missing_cell(self, tmp_path):
        lines = CSV_2X3.strip().splitlines()
        del lines[5]  # drop 2020-01-03 moneyness=0.0
        with pytest.raises(MissingCell) as exc:
            volgrid.load_cube_csv(_write(tmp_path, "\n".join(lines) + "\n"))
        assert exc.value.date == date(2020, 1, 3)
        assert exc.value.coordinate == (0.0, 10.0, 10.0)

    def test_non_positive_vol_names_line(self, tmp_path):
        lines = CSV_2X3.strip().splitlines()
        lines[3] = "2020-01-02,10,10,0.01,-0.001"
        with pytest.raises(NonPositiveVol) as exc:
            volgrid.load_cube_csv(_write(tmp_path, "\n".join(lines) + "\n"))
        assert exc.value.line == 4

    def test_duplicate_row(self, tmp_path):
        text = CSV_2X3 + "2020-01-03,10,10,0.01,0.0059\n"
        with pytest.raises(DuplicateRow) as exc:
            volgrid.load_cube_csv(_write(tmp_path, text))
        assert exc.value.line == 8

    def test_bad_header(self, tmp_path):
        with pytest.raises(UnparseableRow) as exc:
            volgrid.load_cube_csv(_write(tmp_path, "a,b,c\n1,2,3\n"))
        assert exc.value.line == 1

    def test_bad_number(self, tmp_path):
        lines = CSV_2X3.strip().splitlines()
        lines[2] = "2020-01-02,10,10,zero,0.0055"
        with pytest.raises(UnparseableRow) as exc:
            volgrid.load_cube_csv(_write(tmp_path, "\n".join(lines) + "\n"))
        assert exc.value.line == 3

    def test_bad_date(self, tmp_path):
        lines = CSV_2X3.strip().splitlines()
        lines[1] = "02/01/2020,10,10,-0.01,0.0060"
        with pytest.raises(UnparseableRow) as exc:
            volgrid.load_cube_csv(_write(tmp_path, "\n".join(lines) + "\n"))
        assert exc.value.line == 2

    def test_forward_column(self, tmp_path):
        rows = []
        for line in CSV_2X3.strip().splitlines():
            rows.append(line + (",forward" if line.startswith("date") else ",0.021"))
        cube = volgrid.load_cube_csv(_write(tmp_path, "\n".join(rows) + "\n"))
        assert cube.forwards.shape == (2, 1, 1)
        assert cube.forwards[0, 0, 0] == 0.021

    def test_round_trip_write_read(self, tmp_path):
        cube = volgrid.load_cube_csv(_write(tmp_path, CSV_2X3))
        out = tmp_path / "copy.csv"
        volgrid.write_cube_csv(out, cube)
        again = volgrid.load_cube_csv(out)
        assert np.array_equal(cube.vols, again.vols)
        assert cube.dates == again.dates


class TestExtractSlice:
    @pytest.fixture
    def cube(self):
        dates = (date(2021, 1, 4), date(2021, 1, 5))
        m = np.array([-0.01, 0.0, 0.01])
        e = np.array([5.0, 10.0])
        t = np.array([2.0, 10.0])
        rng = np.random.default_rng(0)
        vols = 0.005 + 0.001 * rng.random((2, 3, 2, 2))
        return volgrid.VolCubeSeries(dates, m, e, t, vols)

    def test_moneyness_smile(self, cube):
        fs = volgrid.extract_slice(
            cube, volgrid.SliceSpec("moneyness", {"expiry": 10.0, "tenor": 10.0}))
        assert fs.grid_shape == (3,)
        assert fs.units == ("moneyness",)
        # bit-exact passthrough of the source cells
        assert np.array_equal(fs.values, cube.vols[:, :, 1, 1])

    def test_surface_slice(self, cube):
        fs = volgrid.extract_slice(
            cube, volgrid.SliceSpec("expiry×tenor", {"moneyness": 0.0}))
        assert fs.grid_shape == (2, 2)
        assert fs.units == ("expiry_years", "tenor_years")
        assert np.array_equal(fs.values, cube.vols[:, 1, :, :])

    def test_tenor_slice(self, cube):
        fs = volgrid.extract_slice(
            cube, volgrid.SliceSpec("tenor", {"moneyness": 0.0, "expiry": 5.0}))
        assert np.array_equal(fs.values, cube.vols[:, 1, 0, :])

    def test_off_grid(self, cube):
        with pytest.raises(OffGridCoordinate):
            volgrid.extract_slice(
                cube, volgrid.SliceSpec("moneyness", {"expiry": 7.5, "tenor": 10.0}))


class TestLogReturns:
    def test_log_identity(self):
        fs = _smile_series(np.array([[1.0, 1.0], [np.e, np.e]]))
        rf = volgrid.log_returns(fs)
        assert rf.values.ravel() == pytest.approx([1.0, 1.0], abs=1e-15)
        assert not rf.centered
        assert rf.mean_function is None

    def test_constant_series(self):
        fs = _smile_series(np.full((4, 3), 0.0065))
        assert np.all(volgrid.log_returns(fs).values == 0.0)

    def test_point_one_move(self):
        fs = _smile_series(np.array([[1.0], [1.1]]))
        # natural log evaluated directly: log(1.1)
        assert volgrid.log_returns(fs).values[0, 0] == pytest.approx(0.0953102, abs=1e-7)

    def test_too_few_dates(self):
        with pytest.raises(TooFewDates):
            volgrid.log_returns(_smile_series(np.array([[1.0, 2.0]])))

    def test_non_positive_value(self):
        with pytest.raises(NonPositiveValue):
            volgrid.log_returns(_smile_series(np.array([[1.0, -1.0], [1.0, 1.0]])))

    def test_return_dates_drop_first(self):
        fs = _smile_series(np.full((5, 2), 0.01))
        assert volgrid.log_returns(fs).dates == fs.dates[1:]


class TestCenter:
    def test_symmetric_returns_unchanged(self):
        fs = _smile_series(np.exp(np.array([[0.0, 0.0], [0.2, 0.3], [0.0, 0.0]])))
        rf = volgrid.log_returns(fs)  # returns are {+c, -c} at each point
        centered = volgrid.center(rf)
        assert centered.mean_function == pytest.approx([0.0, 0.0], abs=1e-16)
        assert np.allclose(centered.values, rf.values)

    def test_mean_subtraction(self):
        rf = volgrid.log_returns(_smile_series(np.exp(np.array([[0.0], [0.1], [0.4]]))))
        centered = volgrid.center(rf)
        assert centered.mean_function[0] == pytest.approx(0.2, abs=1e-15)
        assert centered.values[:, 0] == pytest.approx([-0.1, 0.1], abs=1e-15)

    def test_already_centered(self):
        rf = volgrid.log_returns(_smile_series(np.full((3, 2), 0.01) + [[0], [1e-4], [0]]))
        with pytest.raises(AlreadyCentered):
            volgrid.center(volgrid.center(rf))

    def test_round_trip(self):
        rng = np.random.default_rng(1)
        fs = _smile_series(np.exp(0.02 * rng.standard_normal((40, 5))))
        rf = volgrid.log_returns(fs)
        centered = volgrid.center(rf)
        back = centered.values + centered.mean_function
        assert np.max(np.abs(back - rf.values)) < 1e-14

    def test_centered_mean_is_zero(self):
        rng = np.random.default_rng(2)
        fs = _smile_series(np.exp(0.05 * rng.standard_normal((257, 7))))
        centered = volgrid.center(volgrid.log_returns(fs))
        assert np.max(np.abs(centered.values.mean(axis=0))) < 1e-12


def test_returns_of_exp_cumsum_identity():
    # rebuilding levels from centered returns and differencing again
    # reproduces the returns
    rng = np.random.default_rng(3)
    rets = 0.03 * rng.standard_normal((60, 4))
    rets -= rets.mean(axis=0)
    levels = 0.006 * np.exp(np.concatenate([np.zeros((1, 4)), np.cumsum(rets, axis=0)]))
    rf = volgrid.log_returns(_smile_series(levels))
    assert np.max(np.abs(rf.values - rets)) < 1e-12
