"""Implied-volatility cube time series: CSV ingestion, slicing, log-returns.

A "cube" holds normal (absolute-rate) implied vols indexed by
(moneyness, expiry, tenor) for each observation date, with moneyness in the
additive convention strike - forward rate.  Vols are stored as decimals,
e.g. 0.0065 for 65 normal basis points.  Slices of the cube (a smile over
moneyness, a term smile over expiry or tenor, or an expiry x tenor surface)
are the inputs to the decomposition stage.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date as Date

import numpy as np

from .errors import (
    AlreadyCentered,
    DuplicateRow,
    InputError,
    MissingCell,
    NonPositiveValue,
    NonPositiveVol,
    OffGridCoordinate,
    TooFewDates,
    UnparseableRow,
)

AXIS_MONEYNESS = "moneyness"
AXIS_EXPIRY = "expiry"
AXIS_TENOR = "tenor"
AXIS_EXPIRY_TENOR = "expiry_tenor"

_AXIS_ALIASES = {
    "moneyness": AXIS_MONEYNESS,
    "expiry": AXIS_EXPIRY,
    "tenor": AXIS_TENOR,
    "expiry_tenor": AXIS_EXPIRY_TENOR,
    "expiry-tenor": AXIS_EXPIRY_TENOR,
    "expiry×tenor": AXIS_EXPIRY_TENOR,
    "expiryxtenor": AXIS_EXPIRY_TENOR,
    "surface": AXIS_EXPIRY_TENOR,
}

_CSV_COLUMNS = ("date", "expiry_years", "tenor_years", "moneyness", "vol")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VolCubeSeries:
    """Dense time series of implied-vol cubes.

    ``vols`` has shape (dates, moneyness, expiry, tenor); ``forwards`` is
    optional with shape (dates, expiry, tenor).
    """

    dates: tuple[Date, ...]
    moneyness_grid: np.ndarray
    expiry_grid: np.ndarray
    tenor_grid: np.ndarray
    vols: np.ndarray
    forwards: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "moneyness_grid", _readonly(self.moneyness_grid))
        object.__setattr__(self, "expiry_grid", _readonly(self.expiry_grid))
        object.__setattr__(self, "tenor_grid", _readonly(self.tenor_grid))
        object.__setattr__(self, "vols", _readonly(self.vols))
        if self.forwards is not None:
            object.__setattr__(self, "forwards", _readonly(self.forwards))
        for name in ("moneyness_grid", "expiry_grid", "tenor_grid"):
            g = getattr(self, name)
            if g.ndim != 1 or len(g) == 0 or np.any(np.diff(g) <= 0):
                raise InputError(f"{name} must be non-empty and strictly increasing")
        if any(d1 >= d2 for d1, d2 in zip(self.dates, self.dates[1:])):
            raise InputError("dates must be strictly increasing")
        shape = (len(self.dates), len(self.moneyness_grid),
                 len(self.expiry_grid), len(self.tenor_grid))
        if self.vols.shape != shape:
            raise InputError(f"vols shape {self.vols.shape} != {shape}")
        if not np.all(np.isfinite(self.vols)) or np.any(self.vols <= 0):
            raise InputError("vols must be strictly positive and finite")
        if self.forwards is not None and self.forwards.shape != (shape[0], shape[2], shape[3]):
            raise InputError("forwards shape must be (dates, expiry, tenor)")

    @property
    def n_dates(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class SliceSpec:
    """Which 1-D smile or 2-D surface to pull out of a cube.

    ``axis`` is the varying coordinate; ``fixed_coords`` pins the others and
    every pinned value must sit exactly on the matching grid.
    """

    axis: str
    fixed_coords: dict

    def __post_init__(self):
        axis = _AXIS_ALIASES.get(str(self.axis).lower())
        if axis is None:
            raise InputError(f"unknown slice axis {self.axis!r}")
        object.__setattr__(self, "axis", axis)


@dataclass(frozen=True)
class FieldSeries:
    """Per-date function samples on a shared 1-D or 2-D grid."""

    dates: tuple[Date, ...]
    grid_axes: tuple[np.ndarray, ...]
    units: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "grid_axes", tuple(_readonly(g) for g in self.grid_axes))
        object.__setattr__(self, "values", _readonly(self.values))
        dims = tuple(len(g) for g in self.grid_axes)
        if self.values.shape != (len(self.dates),) + dims:
            raise InputError(f"values shape {self.values.shape} != {(len(self.dates),) + dims}")
        if len(self.units) != len(self.grid_axes):
            raise InputError("one unit label per grid axis required")

    @property
    def ndim(self) -> int:
        return len(self.grid_axes)

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.grid_axes)


@dataclass(frozen=True)
class ReturnField:
    """Log-return field over a grid, optionally centered per grid point."""

    field: FieldSeries
    mean_function: np.ndarray | None = None
    centered: bool = False

    def __post_init__(self):
        if self.mean_function is not None:
            object.__setattr__(self, "mean_function", _readonly(self.mean_function))
            if self.mean_function.shape != self.field.grid_shape:
                raise InputError("mean_function must match the grid shape")

    @property
    def dates(self) -> tuple[Date, ...]:
        return self.field.dates

    @property
    def grid_axes(self) -> tuple[np.ndarray, ...]:
        return self.field.grid_axes

    @property
    def values(self) -> np.ndarray:
        return self.field.values


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def load_cube_csv(path) -> VolCubeSeries:
    """Read a cube time series from CSV.

    Expected header: ``date,expiry_years,tenor_years,moneyness,vol`` with an
    optional trailing ``forward`` column.  Dates are ISO-8601, numbers use a
    ``.`` decimal separator, and vols/forwards are decimals in absolute rate
    units.  Grids are inferred as the sorted union of observed coordinates
    and every date must cover the full grid; nothing is interpolated.
    """
    cells: dict = {}
    fwd_cells: dict = {}
    has_forward = False
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise UnparseableRow(1, "empty file") from None
        header = [h.strip() for h in header]
        if tuple(header[:5]) != _CSV_COLUMNS or len(header) > 6:
            raise UnparseableRow(1, f"header must be {','.join(_CSV_COLUMNS)}[,forward]")
        if len(header) == 6:
            if header[5] != "forward":
                raise UnparseableRow(1, "sixth column, if present, must be 'forward'")
            has_forward = True

        n_cols = len(header)
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # blank line
            if len(row) != n_cols:
                raise UnparseableRow(line_no, f"expected {n_cols} columns, got {len(row)}")
            try:
                d = Date.fromisoformat(row[0].strip())
            except ValueError:
                raise UnparseableRow(line_no, f"bad date {row[0]!r}") from None
            try:
                expiry = float(row[1])
                tenor = float(row[2])
                money = float(row[3])
                vol = float(row[4])
            except ValueError:
                raise UnparseableRow(line_no, "bad numeric field") from None
            if not np.isfinite(vol) or vol <= 0.0:
                raise NonPositiveVol(line_no, row[4])
            key = (d, money, expiry, tenor)
            if key in cells:
                raise DuplicateRow(line_no, key)
            cells[key] = vol
            if has_forward:
                try:
                    fwd = float(row[5])
                except ValueError:
                    raise UnparseableRow(line_no, "bad forward field") from None
                fkey = (d, expiry, tenor)
                if fkey in fwd_cells and fwd_cells[fkey] != fwd:
                    raise UnparseableRow(line_no, f"inconsistent forward for {fkey}")
                fwd_cells[fkey] = fwd

    if not cells:
        raise UnparseableRow(2, "no data rows")

    dates = tuple(sorted({k[0] for k in cells}))
    m_grid = np.array(sorted({k[1] for k in cells}))
    e_grid = np.array(sorted({k[2] for k in cells}))
    t_grid = np.array(sorted({k[3] for k in cells}))

    vols = np.empty((len(dates), len(m_grid), len(e_grid), len(t_grid)))
    for i, d in enumerate(dates):
        for j, m in enumerate(m_grid):
            for k, e in enumerate(e_grid):
                for l, t in enumerate(t_grid):
                    v = cells.get((d, m, e, t))
                    if v is None:
                        raise MissingCell(d, (m, e, t))
                    vols[i, j, k, l] = v

    forwards = None
    if has_forward:
        forwards = np.empty((len(dates), len(e_grid), len(t_grid)))
        for i, d in enumerate(dates):
            for k, e in enumerate(e_grid):
                for l, t in enumerate(t_grid):
                    f = fwd_cells.get((d, e, t))
                    if f is None:
                        raise MissingCell(d, ("forward", e, t))
                    forwards[i, k, l] = f

    return VolCubeSeries(dates, m_grid, e_grid, t_grid, vols, forwards)


def write_cube_csv(path, cube: VolCubeSeries) -> None:
    """Emit a cube in the same CSV format ``load_cube_csv`` reads."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = list(_CSV_COLUMNS) + (["forward"] if cube.forwards is not None else [])
        writer.writerow(header)
        for i, d in enumerate(cube.dates):
            for j, m in enumerate(cube.moneyness_grid):
                for k, e in enumerate(cube.expiry_grid):
                    for l, t in enumerate(cube.tenor_grid):
                        row = [d.isoformat(), repr(float(e)), repr(float(t)),
                               repr(float(m)), repr(float(cube.vols[i, j, k, l]))]
                        if cube.forwards is not None:
                            row.append(repr(float(cube.forwards[i, k, l])))
                        writer.writerow(row)


# ---------------------------------------------------------------------------
# Slicing and returns
# ---------------------------------------------------------------------------

def _grid_index(grid: np.ndarray, value, name: str) -> int:
    hits = np.nonzero(grid == float(value))[0]
    if len(hits) != 1:
        raise OffGridCoordinate(f"{name}={value} is not on the grid {grid.tolist()}")
    return int(hits[0])


def extract_slice(cube: VolCubeSeries, spec: SliceSpec) -> FieldSeries:
    """Pull a 1-D smile series or a 2-D expiry x tenor surface series."""
    fixed = spec.fixed_coords
    if spec.axis == AXIS_MONEYNESS:
        ie = _grid_index(cube.expiry_grid, fixed["expiry"], "expiry")
        it = _grid_index(cube.tenor_grid, fixed["tenor"], "tenor")
        values = cube.vols[:, :, ie, it]
        return FieldSeries(cube.dates, (cube.moneyness_grid,), ("moneyness",), values)
    if spec.axis == AXIS_EXPIRY:
        im = _grid_index(cube.moneyness_grid, fixed["moneyness"], "moneyness")
        it = _grid_index(cube.tenor_grid, fixed["tenor"], "tenor")
        values = cube.vols[:, im, :, it]
        return FieldSeries(cube.dates, (cube.expiry_grid,), ("expiry_years",), values)
    if spec.axis == AXIS_TENOR:
        im = _grid_index(cube.moneyness_grid, fixed["moneyness"], "moneyness")
        ie = _grid_index(cube.expiry_grid, fixed["expiry"], "expiry")
        values = cube.vols[:, im, ie, :]
        return FieldSeries(cube.dates, (cube.tenor_grid,), ("tenor_years",), values)
    # expiry x tenor surface
    im = _grid_index(cube.moneyness_grid, fixed["moneyness"], "moneyness")
    values = cube.vols[:, im, :, :]
    return FieldSeries(cube.dates, (cube.expiry_grid, cube.tenor_grid),
                       ("expiry_years", "tenor_years"), values)


def log_returns(fs: FieldSeries) -> ReturnField:
    """Pointwise log-differences between consecutive dates (uncentered)."""
    if len(fs.dates) < 2:
        raise TooFewDates("need at least 2 dates to form returns")
    if np.any(fs.values <= 0) or not np.all(np.isfinite(fs.values)):
        raise NonPositiveValue("all field values must be strictly positive and finite")
    logs = np.log(fs.values)
    rets = logs[1:] - logs[:-1]
    out = FieldSeries(fs.dates[1:], fs.grid_axes, fs.units, rets)
    return ReturnField(out, mean_function=None, centered=False)


def center(rf: ReturnField) -> ReturnField:
    """Subtract the per-grid-point sample mean, keeping it for reconstruction."""
    if rf.centered:
        raise AlreadyCentered("return field is already centered")
    mean = rf.values.mean(axis=0)
    out = FieldSeries(rf.dates, rf.grid_axes, rf.field.units, rf.values - mean)
    return ReturnField(out, mean_function=mean, centered=True)
