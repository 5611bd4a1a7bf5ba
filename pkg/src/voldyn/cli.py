"""Command-line pipeline: synth, decompose, fhs, backtest, check-arb.

Settings come from an optional flat ``key = value`` config file with CLI
flags taking precedence.  Every run writes a ``manifest.json`` recording the
resolved configuration, the seed (when generating) and SHA-256 hashes of all
output files, so identical configs reproduce byte-identical reports.

Exit codes: 0 success, 1 input error, 2 numerical failure, 3 arbitrage
violation found.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import backtest as bt
from . import bachelier, fhs, kldecomp, synthmarket, volgrid
from .errors import InputError, NumericalError, VoldynError

log = logging.getLogger("voldyn")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2
EXIT_ARBITRAGE = 3


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def parse_config_file(path) -> dict:
    """Flat ``key = value`` pairs, ``#`` comments, blank lines ignored."""
    out = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _as_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    if str(text).lower() in ("1", "true", "yes", "on"):
        return True
    if str(text).lower() in ("0", "false", "no", "off"):
        return False
    raise InputError(f"expected a boolean, got {text!r}")


def _as_floats(text) -> tuple:
    if isinstance(text, (tuple, list)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).split(","))


def parse_grid(text) -> np.ndarray:
    """``start:stop:count`` linspace or an explicit comma list."""
    text = str(text)
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InputError(f"grid must be start:stop:count, got {text!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 2 or not start < stop:
            raise InputError(f"bad grid specification {text!r}")
        return np.linspace(start, stop, count)
    return np.array(_as_floats(text))


@dataclass
class PipelineConfig:
    """Resolved settings for one run."""

    input: str | None = None
    out: str = "voldyn-out"
    axis: str = "moneyness"
    fixed: dict = field(default_factory=dict)
    basis_degree: int | None = None
    n_modes: int = 3
    window: int = 250
    theta: float = 0.9
    ewma_window: int = 60
    alphas: tuple = (0.01, 0.99)
    use_ar: tuple = (True, False, False)
    signs: tuple = ("same", "same", "same")
    reconstruction: str = fhs.RECONSTRUCTION_MULTIPLICATIVE
    backtest_alphas: tuple | None = None
    forward: float | None = None
    pricing_expiry: float | None = None
    plots: bool = True
    # synth settings
    seed: int = 12345
    dates: int = 2500
    modes: int = 3
    lambdas: tuple = (1.8e-5, 1.8e-7, 2e-8)
    betas: tuple = (0.18, 0.0, 0.0)
    vol_cluster: float = 0.99
    grid: np.ndarray = field(default_factory=lambda: np.linspace(-0.02, 0.02, 21))
    base_vol: float = 0.006

    def fhs_config(self) -> fhs.FhsConfig:
        # forecast every level the backtest will need
        alphas = set(self.alphas) | set(self.backtest_alphas or ())
        return fhs.FhsConfig(
            window=self.window,
            alphas=tuple(sorted(alphas)),
            ewma=fhs.EwmaParams(self.theta, self.ewma_window),
            use_ar=self.use_ar,
            signs=self.signs,
            reconstruction=self.reconstruction,
        )

    def as_manifest_dict(self) -> dict:
        return {
            "input": self.input,
            "out": str(self.out),
            "slice.axis": self.axis,
            "slice.fixed": {k: v for k, v in sorted(self.fixed.items())},
            "basis.degree": self.basis_degree,
            "n_modes": self.n_modes,
            "fhs.L": self.window,
            "fhs.theta": self.theta,
            "fhs.W": self.ewma_window,
            "fhs.alphas": list(self.alphas),
            "fhs.use_ar": list(self.use_ar),
            "fhs.signs": list(self.signs),
            "fhs.reconstruction": self.reconstruction,
            "pricing.forward": self.forward,
            "pricing.expiry": self.pricing_expiry,
            "plots": self.plots,
            "synth.seed": self.seed,
            "synth.dates": self.dates,
            "synth.modes": self.modes,
            "synth.lambdas": list(self.lambdas),
            "synth.beta": list(self.betas),
            "synth.vol_cluster": self.vol_cluster,
            "synth.grid": [float(g) for g in self.grid],
            "synth.base_vol": self.base_vol,
        }


_MODE_KEYS = ("mode_1", "mode_2", "mode_3", "mode_4", "mode_5", "mode_6")


def _per_mode(cfg: dict, prefix: str, default: tuple, convert):
    values = list(default)
    for i, key in enumerate(_MODE_KEYS):
        full = f"{prefix}.{key}"
        if full in cfg:
            while len(values) <= i:
                values.append(default[-1] if default else None)
            values[i] = convert(cfg[full])
    return tuple(values)


def build_config(file_cfg: dict, args: argparse.Namespace) -> PipelineConfig:
    """Layer CLI flags over config-file values over defaults."""
    cfg = PipelineConfig()

    def pick(flag_name, key, convert, current):
        flag = getattr(args, flag_name, None)
        if flag is not None:
            return convert(flag)
        if key in file_cfg:
            return convert(file_cfg[key])
        return current

    cfg.input = pick("input", "input", str, cfg.input)
    cfg.out = pick("out", "out", str, cfg.out)
    cfg.axis = pick("axis", "slice.axis", str, cfg.axis)
    for coord in ("expiry", "tenor", "moneyness"):
        val = pick(coord, f"slice.{coord}", float, cfg.fixed.get(coord))
        if val is not None:
            cfg.fixed[coord] = val
    cfg.basis_degree = pick("basis_degree", "basis.degree", int, cfg.basis_degree)
    cfg.n_modes = pick("n_modes", "n_modes", int, cfg.n_modes)
    cfg.window = pick("window", "fhs.L", int, cfg.window)
    cfg.theta = pick("theta", "fhs.theta", float, cfg.theta)
    cfg.ewma_window = pick("ewma_window", "fhs.W", int, cfg.ewma_window)
    cfg.alphas = pick("alphas", "fhs.alphas", _as_floats, cfg.alphas)
    cfg.use_ar = _per_mode(file_cfg, "fhs.use_ar", cfg.use_ar, _as_bool)
    cfg.signs = _per_mode(file_cfg, "fhs.signs", cfg.signs, str)
    cfg.reconstruction = pick("reconstruction", "fhs.reconstruction", str, cfg.reconstruction)
    cfg.forward = pick("forward", "pricing.forward", float, cfg.forward)
    cfg.pricing_expiry = pick("pricing_expiry", "pricing.expiry", float, cfg.pricing_expiry)
    if getattr(args, "no_plots", False):
        cfg.plots = False
    elif "plots" in file_cfg:
        cfg.plots = _as_bool(file_cfg["plots"])
    cfg.seed = pick("seed", "synth.seed", int, cfg.seed)
    cfg.dates = pick("dates", "synth.dates", int, cfg.dates)
    cfg.modes = pick("modes", "synth.modes", int, cfg.modes)
    cfg.lambdas = pick("lambdas", "synth.lambdas", _as_floats, cfg.lambdas)
    cfg.betas = pick("beta", "synth.beta", _as_floats, cfg.betas)
    cfg.vol_cluster = pick("vol_cluster", "synth.vol_cluster", float, cfg.vol_cluster)
    cfg.grid = pick("grid", "synth.grid", parse_grid, cfg.grid)
    cfg.base_vol = pick("base_vol", "synth.base_vol", float, cfg.base_vol)
    return cfg


# ---------------------------------------------------------------------------
# Report helpers
# ---------------------------------------------------------------------------

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(outdir: Path, command: str, cfg: PipelineConfig, outputs) -> Path:
    manifest = {
        "command": command,
        "config": cfg.as_manifest_dict(),
        "seed": cfg.seed if command == "synth" else None,
        "outputs": {p.name: _sha256(p) for p in sorted(outputs)},
    }
    path = outdir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float) -> str:
    return repr(float(x))


def _alpha_tag(alpha: float) -> str:
    return f"q{alpha:g}".replace("0.", "")  # 0.01 -> q01, 0.99 -> q99


# ---------------------------------------------------------------------------
# Pipeline stages shared by subcommands
# ---------------------------------------------------------------------------

def _load_slice(cfg: PipelineConfig):
    if cfg.input is None:
        raise InputError("no input cube; pass --input or set 'input' in the config")
    path = Path(cfg.input)
    if not path.exists():
        raise InputError(f"input file not found: {path}")
    cube = volgrid.load_cube_csv(path)
    fixed = dict(cfg.fixed)
    # default any unpinned coordinate when its grid has a single point
    defaults = {"expiry": cube.expiry_grid, "tenor": cube.tenor_grid,
                "moneyness": cube.moneyness_grid}
    for coord, grid in defaults.items():
        if coord not in fixed and len(grid) == 1:
            fixed[coord] = float(grid[0])
    spec = volgrid.SliceSpec(cfg.axis, fixed)
    fs = volgrid.extract_slice(cube, spec)
    return cube, fs, fixed


def _decompose_stage(cfg: PipelineConfig):
    cube, fs, fixed = _load_slice(cfg)
    rf = volgrid.center(volgrid.log_returns(fs))
    basis = None
    if cfg.basis_degree is not None:
        basis = kldecomp.BasisSpec(tuple(min(cfg.basis_degree, len(g))
                                         for g in rf.grid_axes))
    model = kldecomp.decompose(rf, basis=basis, n_modes=cfg.n_modes)
    proj = kldecomp.project(rf, model)
    return cube, fs, fixed, rf, model, proj


def _coordinate_columns(fs: volgrid.FieldSeries):
    if fs.ndim == 1:
        coords = fs.grid_axes[0][:, None]
    else:
        x1, x2 = np.meshgrid(fs.grid_axes[0], fs.grid_axes[1], indexing="ij")
        coords = np.column_stack([x1.ravel(), x2.ravel()])
    return list(fs.units), coords


def _emit_decompose_reports(outdir: Path, cfg: PipelineConfig, fs, model, proj):
    outputs = []
    shares = kldecomp.explained_variance(model)

    spectrum = {
        "lambdas": [m.eigenvalue for m in model.modes],
        "shares": shares.tolist(),
        "basis_degree": list(model.basis.degrees),
        "grid_size": list(model.grid_shape),
    }
    spath = outdir / "spectrum.json"
    spath.write_text(json.dumps(spectrum, indent=2) + "\n", encoding="utf-8")
    outputs.append(spath)

    unit_names, coords = _coordinate_columns(fs)
    mode_cols = np.column_stack([model.mode_values(i).ravel()
                                 for i in range(model.n_modes)])
    header = unit_names + [f"e_{i + 1}" for i in range(model.n_modes)]
    rows = [[_fmt(v) for v in coords[j]] + [_fmt(v) for v in mode_cols[j]]
            for j in range(coords.shape[0])]
    epath = outdir / "eigenfunctions.csv"
    _write_csv(epath, header, rows)
    outputs.append(epath)

    ppath = outdir / "projections.csv"
    _write_csv(ppath,
               ["date"] + [f"xi_{i + 1}" for i in range(proj.n_modes)],
               [[d.isoformat()] + [_fmt(v) for v in proj.values[t]]
                for t, d in enumerate(proj.dates)])
    outputs.append(ppath)

    if cfg.plots:
        from . import plots
        fp = outdir / "eigenfunctions.png"
        plots.save_eigenfunctions(fp, model.grid_axes,
                                  [model.mode_values(i) for i in range(model.n_modes)],
                                  shares)
        outputs.append(fp)
        fp = outdir / "spectrum.png"
        plots.save_spectrum(fp, [m.eigenvalue for m in model.modes], shares)
        outputs.append(fp)
        fp = outdir / "projections.png"
        plots.save_projections(fp, proj.dates, proj.values)
        outputs.append(fp)

    print("mode  eigenvalue     share")
    for i, (lam, share) in enumerate(zip(spectrum["lambdas"], shares)):
        print(f"{i + 1:>4}  {lam:<12.6g}  {share:8.4%}")
    return outputs


def _fhs_stage(cfg: PipelineConfig):
    cube, fs, fixed, rf, model, proj = _decompose_stage(cfg)
    fhs_cfg = cfg.fhs_config()
    forecasts = fhs.forecast_modes(proj.dates, proj.values, fhs_cfg)
    # forecast dates where every mode has a quantile
    common = set(forecasts[0].xi_quantiles.dates)
    for fc in forecasts[1:]:
        common &= set(fc.xi_quantiles.dates)
    dates = tuple(sorted(common))
    if not dates:
        raise InputError("no common forecast dates across modes; series too short")
    return cube, fs, fixed, rf, model, proj, fhs_cfg, forecasts, dates


def _scenario_fields(fs, model, fhs_cfg, forecasts, dates, alphas, reconstruction):
    """Extreme smiles per (date, alpha): returns {alpha: array (n_dates, grid)}."""
    idx = {d: i for i, d in enumerate(fs.dates)}
    out = {a: np.empty((len(dates),) + model.grid_shape) for a in alphas}
    u_hat = {a: np.empty((len(dates),) + model.grid_shape) for a in alphas}
    for row, d in enumerate(dates):
        prev = fs.values[idx[d] - 1]
        for a in alphas:
            xi_hat = fhs.scenario_xi(forecasts, fhs_cfg, d, a)
            u = kldecomp.reconstruct(model, xi_hat, len(xi_hat)) + model.mean_function
            u_hat[a][row] = u
            if reconstruction == fhs.RECONSTRUCTION_MULTIPLICATIVE:
                out[a][row] = prev * np.exp(u)
            else:
                out[a][row] = prev + np.exp(u)
    return out, u_hat


def _emit_fhs_reports(outdir: Path, cfg: PipelineConfig, fs, model, proj,
                      fhs_cfg, forecasts, dates):
    outputs = []
    alphas = fhs_cfg.alphas
    smiles, u_hat = _scenario_fields(fs, model, fhs_cfg, forecasts, dates,
                                     alphas, fhs_cfg.reconstruction)

    header = ["date"]
    for m in range(len(forecasts)):
        for a in alphas:
            header.append(f"xi_{m + 1}_{_alpha_tag(a)}")
    for a in alphas:
        header += [f"u_{_alpha_tag(a)}_min", f"u_{_alpha_tag(a)}_max"]
    rows = []
    date_rows = {fc.mode: {d: i for i, d in enumerate(fc.xi_quantiles.dates)}
                 for fc in forecasts}
    for row, d in enumerate(dates):
        cells = [d.isoformat()]
        for fc in forecasts:
            r = date_rows[fc.mode][d]
            for a in alphas:
                cells.append(_fmt(fc.xi_quantiles.level(a)[r]))
        for a in alphas:
            u = u_hat[a][row]
            cells += [_fmt(u.min()), _fmt(u.max())]
        rows.append(cells)
    vpath = outdir / "var_report.csv"
    _write_csv(vpath, header, rows)
    outputs.append(vpath)

    # per-strike extreme vols, one block per alpha
    if fs.ndim == 1:
        grid = fs.grid_axes[0]
        header = ["date", "alpha"] + [_fmt(m) for m in grid]
        rows = []
        for a in alphas:
            for row, d in enumerate(dates):
                rows.append([d.isoformat(), f"{a:g}"] + [_fmt(v) for v in smiles[a][row]])
        epath = outdir / "extreme_smiles.csv"
        _write_csv(epath, header, rows)
        outputs.append(epath)

    if cfg.plots:
        from . import plots
        fc = forecasts[0]
        rq = fc.residual_quantiles
        eps_idx = {d: i for i, d in enumerate(fc.residuals.dates)}
        realized = np.array([fc.residuals.values[eps_idx[d]] for d in rq.dates])
        fp = outdir / "var_contour_mode1.png"
        plots.save_var_contour(fp, rq.dates, realized,
                               rq.level(alphas[0]), rq.level(alphas[-1]),
                               "mode 1 residual")
        outputs.append(fp)
        if fs.ndim == 1:
            idx = {d: i for i, d in enumerate(fs.dates)}
            last = dates[-1]
            fp = outdir / "extreme_smiles.png"
            plots.save_smiles(fp, fs.grid_axes[0], fs.values[idx[last] - 1],
                              {a: smiles[a][-1] for a in alphas}, last.isoformat())
            outputs.append(fp)
    return outputs, smiles


def _residual_backtests(forecasts, alphas):
    """Hit sequences and test reports per (mode, alpha) on the residuals."""
    results = []
    for fc in forecasts:
        eps_idx = {d: i for i, d in enumerate(fc.residuals.dates)}
        rq = fc.residual_quantiles
        realized = fhs.ScalarSeries(
            rq.dates, np.array([fc.residuals.values[eps_idx[d]] for d in rq.dates]))
        for a in alphas:
            h = bt.hit_sequence(realized, rq, a)
            results.append((fc.mode, h, bt.evaluate(h)))
    return results


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def run_synth(cfg: PipelineConfig, outdir: Path) -> int:
    grid = np.asarray(cfg.grid, dtype=float)
    spec = synthmarket.SynthSpec(
        grid_axes=(grid,),
        units=("moneyness",),
        lambdas=cfg.lambdas[:cfg.modes],
        base_smile=synthmarket.default_base_smile(grid, cfg.base_vol),
        n_dates=cfg.dates,
        seed=cfg.seed,
        ar_betas=cfg.betas[:cfg.modes],
        vol_cluster=cfg.vol_cluster,
    )
    cube = synthmarket.synthesize_cube(spec)
    cpath = outdir / "cube.csv"
    volgrid.write_cube_csv(cpath, cube)
    print(f"wrote {cpath} ({cube.n_dates} dates, {len(grid)} moneyness points, "
          f"seed {cfg.seed})")
    write_manifest(outdir, "synth", cfg, [cpath])
    return EXIT_OK


def run_decompose(cfg: PipelineConfig, outdir: Path) -> int:
    _, fs, _, _, model, proj = _decompose_stage(cfg)
    outputs = _emit_decompose_reports(outdir, cfg, fs, model, proj)
    write_manifest(outdir, "decompose", cfg, outputs)
    return EXIT_OK


def run_fhs(cfg: PipelineConfig, outdir: Path) -> int:
    cube, fs, fixed, rf, model, proj, fhs_cfg, forecasts, dates = _fhs_stage(cfg)
    outputs = _emit_decompose_reports(outdir, cfg, fs, model, proj)
    more, _ = _emit_fhs_reports(outdir, cfg, fs, model, proj, fhs_cfg, forecasts, dates)
    outputs += more
    print(f"{len(dates)} forecast dates, alphas {list(fhs_cfg.alphas)}")
    write_manifest(outdir, "fhs", cfg, outputs)
    return EXIT_OK


def run_backtest(cfg: PipelineConfig, outdir: Path) -> int:
    cube, fs, fixed, rf, model, proj, fhs_cfg, forecasts, dates = _fhs_stage(cfg)
    results = _residual_backtests(forecasts, fhs_cfg.alphas)
    outputs = []

    records = []
    for mode, h, rep in results:
        records.append({
            "mode": mode + 1,
            "tail": rep.tail,
            "alpha": rep.alpha,
            "T00": rep.counts.t00,
            "T01": rep.counts.t01,
            "T10": rep.counts.t10,
            "T11": rep.counts.t11,
            "pof_stat": rep.pof_stat,
            "pof_pvalue": rep.pof_pvalue,
            "ind_stat": rep.ind_stat,
            "ind_pvalue": rep.ind_pvalue,
        })
    jpath = outdir / "backtest.json"
    jpath.write_text(json.dumps(records, indent=2) + "\n", encoding="utf-8")
    outputs.append(jpath)

    cpath = outdir / "backtest_summary.csv"
    _write_csv(cpath,
               ["mode", "tail", "alpha", "hit_count", "hit_freq",
                "pof_stat", "pof_pvalue", "ind_stat", "ind_pvalue"],
               [[mode + 1, rep.tail, f"{rep.alpha:g}", int(h.hits.sum()),
                 _fmt(h.hits.mean()), _fmt(rep.pof_stat), _fmt(rep.pof_pvalue),
                 _fmt(rep.ind_stat), _fmt(rep.ind_pvalue)]
                for mode, h, rep in results])
    outputs.append(cpath)

    if cfg.plots:
        from . import plots
        h0 = results[0][1]
        hit_map = {f"mode {m + 1} {rep.tail}": h.hits for m, h, rep in results}
        fp = outdir / "backtest_hits.png"
        plots.save_hits(fp, h0.dates, hit_map)
        outputs.append(fp)

    for mode, h, rep in results:
        print(f"mode {mode + 1} {rep.tail} tail (alpha={rep.alpha:g}): "
              f"hits {int(h.hits.sum())}/{len(h.hits)}, "
              f"POF p={rep.pof_pvalue:.4f}, IND p={rep.ind_pvalue:.4f}")
    write_manifest(outdir, "backtest", cfg, outputs)
    return EXIT_OK


def run_check_arb(cfg: PipelineConfig, outdir: Path) -> int:
    cube, fs, fixed, rf, model, proj, fhs_cfg, forecasts, dates = _fhs_stage(cfg)
    if fs.ndim != 1 or fs.units[0] != "moneyness":
        raise InputError("check-arb needs a moneyness-axis slice")
    grid = fs.grid_axes[0]
    alphas = fhs_cfg.alphas
    smiles, _ = _scenario_fields(fs, model, fhs_cfg, forecasts, dates,
                                 alphas, fhs_cfg.reconstruction)

    forward = cfg.forward
    if forward is None:
        forward = 0.02
    expiry = cfg.pricing_expiry
    if expiry is None:
        expiry = float(fixed.get("expiry", 1.0))
    strikes = forward + grid

    records = []
    n_violations = 0
    for row, d in enumerate(dates):
        for a in alphas:
            curve = bachelier.price_curve(forward, strikes, grid, smiles[a][row], expiry)
            rep = bachelier.check_no_arbitrage(curve)
            n_violations += len(rep.violations)
            records.append({
                "date": d.isoformat(),
                "alpha": a,
                "monotone_ok": rep.monotone_ok,
                "convex_ok": rep.convex_ok,
                "violations": [{"index": i, "kind": k} for i, k in rep.violations],
            })
    jpath = outdir / "arbitrage.json"
    jpath.write_text(json.dumps(records, indent=2) + "\n", encoding="utf-8")
    outputs = [jpath]

    if cfg.plots:
        from . import plots
        idx = {d: i for i, d in enumerate(fs.dates)}
        last = dates[-1]
        prev_smile = fs.values[idx[last] - 1]
        curves = {"previous": bachelier.price_curve(forward, strikes, grid,
                                                    prev_smile, expiry).prices}
        for a in alphas:
            curves[f"alpha={a:g}"] = bachelier.price_curve(
                forward, strikes, grid, smiles[a][-1], expiry).prices
        fp = outdir / "price_curves.png"
        plots.save_price_curves(fp, strikes, curves, last.isoformat())
        outputs.append(fp)

    print(f"checked {len(dates)} dates x {len(alphas)} scenarios: "
          f"{n_violations} violation(s)")
    write_manifest(outdir, "check-arb", cfg, outputs)
    return EXIT_ARBITRAGE if n_violations else EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="flat key=value config file")
    shared.add_argument("--out", help="output directory (default voldyn-out)")
    shared.add_argument("--verbose", action="store_true", help="debug logging")
    shared.add_argument("--no-plots", action="store_true", dest="no_plots",
                        help="skip figure rendering")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", help="cube CSV to analyse")
    data.add_argument("--axis", help="slice axis: moneyness|expiry|tenor|expiry_tenor")
    data.add_argument("--expiry", type=float, help="fixed expiry (years)")
    data.add_argument("--tenor", type=float, help="fixed tenor (years)")
    data.add_argument("--moneyness", type=float, help="fixed moneyness")
    data.add_argument("--basis-degree", type=int, dest="basis_degree",
                      help="Legendre functions per axis (default min(8, grid))")
    data.add_argument("--n-modes", type=int, dest="n_modes", help="modes to keep")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--window", type=int, help="historical-simulation window L")
    sim.add_argument("--theta", type=float, help="EWMA decay")
    sim.add_argument("--ewma-window", type=int, dest="ewma_window",
                     help="EWMA seed window W")
    sim.add_argument("--alphas", help="comma-separated quantile levels")
    sim.add_argument("--reconstruction",
                     choices=[fhs.RECONSTRUCTION_MULTIPLICATIVE,
                              fhs.RECONSTRUCTION_ADDITIVE_PAPER],
                     help="extreme-smile reconstruction rule")

    parser = argparse.ArgumentParser(
        prog="voldyn",
        description="Vol-smile dynamics: functional decomposition, FHS VaR, "
                    "no-arbitrage checks and VaR backtesting.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[shared],
                       help="generate a synthetic cube CSV")
    p.add_argument("--seed", type=int, help="generator seed")
    p.add_argument("--dates", type=int, help="number of dates")
    p.add_argument("--modes", type=int, help="number of modes")
    p.add_argument("--lambdas", help="comma-separated mode variances")
    p.add_argument("--beta", help="comma-separated AR coefficients per mode")
    p.add_argument("--vol-cluster", type=float, dest="vol_cluster",
                   help="variance persistence in [0, 1)")
    p.add_argument("--grid", help="moneyness grid start:stop:count")
    p.add_argument("--base-vol", type=float, dest="base_vol",
                   help="ATM level of the base smile")

    sub.add_parser("decompose", parents=[shared, data],
                   help="eigenmodes, spectrum and projections")
    sub.add_parser("fhs", parents=[shared, data, sim],
                   help="forecast quantiles and extreme smiles")
    sub.add_parser("backtest", parents=[shared, data, sim],
                   help="Kupiec and Christoffersen tests on the forecasts")
    p = sub.add_parser("check-arb", parents=[shared, data, sim],
                       help="no-arbitrage check of extreme price curves")
    p.add_argument("--forward", type=float, help="forward rate for pricing")
    p.add_argument("--pricing-expiry", type=float, dest="pricing_expiry",
                   help="expiry used for pricing (default: slice expiry)")
    return parser


_RUNNERS = {
    "synth": run_synth,
    "decompose": run_decompose,
    "fhs": run_fhs,
    "backtest": run_backtest,
    "check-arb": run_check_arb,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        file_cfg = parse_config_file(args.config) if args.config else {}
        cfg = build_config(file_cfg, args)
        outdir = Path(cfg.out)
        outdir.mkdir(parents=True, exist_ok=True)
        return _RUNNERS[args.command](cfg, outdir)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except VoldynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
