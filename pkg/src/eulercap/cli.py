"""Command-line entry point.

Figure modes simulate the two-sub-portfolio factor model once and sweep the
sub-portfolio weight ``u`` over a grid on that common sample. The scenario
modes (``alloc``, ``divers``, ``cdo``, ``impact``) read a CSV table instead.
Every output is a CSV table preceded by one ``#`` provenance line.

Exit codes: 0 success, 1 computational degeneracy, 2 invalid input.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

from eulercap import __version__
from eulercap.allocation import (
    diversification_index,
    euler_contrib,
    marginal_contrib,
    marginal_diversification_index,
    normalized_marginal_contrib,
    rorac,
    standalone_risks,
)
from eulercap.config import (
    DEFAULT_GAINS,
    Figure,
    Mode,
    RunConfig,
    build_config,
    read_config_file,
)
from eulercap.errors import DegeneracyError, ValidationError
from eulercap.impact import ConditionalELSample, conditional_el_sample, risk_impact
from eulercap.scenarios import (
    Convention,
    ScenarioMatrix,
    as_weights,
    load_scenarios,
    losses_to_profit_loss,
)
from eulercap.tranches import tranche_loss_components, tranche_ratio_se
from eulercap.vasicek import FactorSample, simulate

EXIT_OK = 0
EXIT_DEGENERATE = 1
EXIT_INVALID = 2

Row = list[object]


class Table:
    """Header plus rows, rendered as CSV with a provenance comment line."""

    def __init__(self, columns: Sequence[str]):
        self.columns = list(columns)
        self.rows: list[Row] = []

    def add(self, row: Row) -> None:
        """Append one row; its length must match the columns."""
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} cells, table has {len(self.columns)} columns")
        self.rows.append(row)

    def render(self, provenance: str) -> str:
        """CSV text preceded by the provenance comment line."""
        buf = io.StringIO()
        buf.write(f"# {provenance}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()


def _cell(v: object) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def provenance(cfg: RunConfig, n: int) -> str:
    """The ``#`` header line: version, mode, config hash, seed, N and measure."""
    seed = cfg.seed if cfg.mode is Mode.FIGURE else "none"
    parts = [f"eulercap {__version__}", f"mode={cfg.mode.value}"]
    if cfg.figure is not None:
        parts.append(f"figure={cfg.figure.value}")
    parts += [f"config={cfg.digest()}", f"seed={seed}", f"N={n}", f"measure={cfg.measure.describe()}"]
    return " ".join(parts)


def _grid_map(cfg: RunConfig, fn: Callable[[float], list[Row]]) -> list[Row]:
    """Evaluate ``fn`` at every grid point; rows come back in grid order."""
    grid = [float(u) for u in cfg.grid]
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(fn, grid))
    else:
        chunks = [fn(u) for u in grid]
    return [row for chunk in chunks for row in chunk]


def _portfolio(u: float) -> np.ndarray:
    return np.array([u, 1.0 - u])


def figure_rorac(cfg: RunConfig, sample: FactorSample) -> Table:
    """Portfolio and per-sub-portfolio RORAC curves over the weight grid."""
    gains = cfg.gains if cfg.gains is not None else DEFAULT_GAINS
    pl = losses_to_profit_loss(sample.loss_matrix(), gains)
    names = pl.asset_names
    table = Table(["u", "portfolio_rorac", *(f"rorac_{n}" for n in names)])

    def point(u: float) -> list[Row]:
        w = _portfolio(u)
        rep = euler_contrib(cfg.measure, pl, w, cfg.kernel, rescale=cfg.rescale_var_contrib)
        # the smoothed quantile is the risk function the kernel contributions differentiate
        rr = rorac(pl, w, cfg.measure, rep, capital=rep.total)
        return [[u, rr.portfolio_rorac, *rr.per_asset_rorac]]

    for row in _grid_map(cfg, point):
        table.add(row)
    return table


def figure_tranches(cfg: RunConfig, sample: FactorSample) -> Table:
    """Tranche EL ratios and per-name component ratios over the weight grid."""
    losses = sample.loss_matrix()
    names = losses.asset_names
    table = Table(["u", "tranche", "el_ratio", "el_ratio_se",
                   *(f"component_ratio_{n}" for n in names)])

    def point(u: float) -> list[Row]:
        w = _portfolio(u)
        comp = tranche_loss_components(losses, w, cfg.tranches, cfg.kernel)
        se = tranche_ratio_se(losses, w, cfg.tranches)
        ratios = comp.tranche_ratios()
        cr = comp.component_ratios()
        return [[u, j + 1, ratios[j], se[j], *cr[:, j]] for j in range(ratios.size)]

    for row in _grid_map(cfg, point):
        table.add(row)
    return table


def figure_impact(cfg: RunConfig, sample: FactorSample, with_quasi: bool) -> Table:
    """Risk impact curves of both factors over the weight grid."""
    cols = ["u", "factor", "ri_sigma", "ri_var", "ri_es"] + (["qri_es"] if with_quasi else [])
    table = Table(cols)
    alpha = cfg.measure.alpha if cfg.measure.alpha is not None else 0.999

    def point(u: float) -> list[Row]:
        rows = []
        for factor in ("S1", "S2"):
            pairs = conditional_el_sample(sample.params, u, factor, sample)
            rep = risk_impact(pairs, alpha, cfg.kernel)
            row: Row = [u, factor, rep.ri_sigma, rep.ri_var, rep.ri_es]
            if with_quasi:
                row.append(rep.qri_es)
            rows.append(row)
        return rows

    for row in _grid_map(cfg, point):
        table.add(row)
    return table


def run_figure(cfg: RunConfig) -> tuple[Table, int]:
    """Simulate the factor model once and build the requested curve table."""
    assert cfg.model is not None
    sample = simulate(cfg.model, cfg.n_scenarios, cfg.seed, workers=cfg.workers)
    if cfg.figure is Figure.RORAC:
        table = figure_rorac(cfg, sample)
    elif cfg.figure is Figure.TRANCHE_EL:
        table = figure_tranches(cfg, sample)
    else:
        table = figure_impact(cfg, sample, cfg.figure is Figure.QRI)
    return table, len(sample)


def _profit_loss(cfg: RunConfig, m: ScenarioMatrix) -> ScenarioMatrix:
    """Scenario-mode input as profit/loss; loss tables become ``gains - L``."""
    if m.convention is Convention.PROFIT_LOSS:
        if cfg.gains is not None:
            raise ValidationError("gains apply to loss_only scenario files only")
        return m
    gains = cfg.gains if cfg.gains is not None else (0.0,) * m.n_assets
    return losses_to_profit_loss(m, gains)


def run_alloc(cfg: RunConfig, m: ScenarioMatrix) -> Table:
    """Euler, marginal and stand-alone allocation report for a scenario file."""
    pl = _profit_loss(cfg, m)
    w = as_weights(cfg.weights if cfg.weights is not None else np.ones(pl.n_assets), pl.n_assets)
    rep = euler_contrib(cfg.measure, pl, w, cfg.kernel, rescale=cfg.rescale_var_contrib)
    marg = marginal_contrib(cfg.measure, pl, w)
    try:
        norm = normalized_marginal_contrib(cfg.measure, pl, w).per_asset
    except DegeneracyError:
        norm = np.full(pl.n_assets, np.nan)
    alone = standalone_risks(cfg.measure, pl, w)
    rr = rorac(pl, w, cfg.measure, rep)
    table = Table(["asset", "weight", "euler", "marginal", "marginal_normalized",
                   "standalone", "rorac"])
    for i, name in enumerate(pl.asset_names):
        table.add([name, float(w[i]), rep.per_asset[i], marg.per_asset[i], norm[i], alone[i],
                   rr.per_asset_rorac[i]])
    total = cfg.measure.evaluate(pl.values @ w)
    table.add(["portfolio", float(w.sum()), float(rep.per_asset.sum()), float(marg.per_asset.sum()),
               float(np.sum(norm)), float(alone.sum()), rr.portfolio_rorac])
    table.add(["risk", "", total, "", "", "", ""])
    return table


def run_divers(cfg: RunConfig, m: ScenarioMatrix) -> Table:
    """Stand-alone risks and diversification indices for a scenario file."""
    pl = _profit_loss(cfg, m)
    w = as_weights(cfg.weights if cfg.weights is not None else np.ones(pl.n_assets), pl.n_assets)
    rep = euler_contrib(cfg.measure, pl, w, cfg.kernel, rescale=cfg.rescale_var_contrib)
    alone = standalone_risks(cfg.measure, pl, w)
    mdi = marginal_diversification_index(cfg.measure, pl, w, rep)
    table = Table(["asset", "standalone", "euler", "diversification_index"])
    for i, name in enumerate(pl.asset_names):
        table.add([name, alone[i], rep.per_asset[i], mdi[i]])
    table.add(["portfolio", float(alone.sum()), cfg.measure.evaluate(pl.values @ w),
               diversification_index(cfg.measure, pl, w)])
    return table


def run_cdo(cfg: RunConfig, m: ScenarioMatrix) -> Table:
    """Tranche loss components for a loss-only scenario file."""
    if m.convention is not Convention.LOSS_ONLY:
        raise ValidationError("cdo mode needs a loss_only scenario file")
    w = as_weights(cfg.weights if cfg.weights is not None else np.full(m.n_assets, 1.0 / m.n_assets),
                   m.n_assets)
    comp = tranche_loss_components(m, w, cfg.tranches, cfg.kernel)
    table = Table(["name", *(f"tranche_{j + 1}" for j in range(comp.E.shape[1])), "name_el"])
    for i, name in enumerate(m.asset_names):
        table.add([name, *comp.E[i], comp.asset_el[i]])
    table.add(["tranche_el", *comp.tranche_el, float(comp.asset_el.sum())])
    table.add(["detachment", *comp.levels[1:], ""])
    return table


def run_impact(cfg: RunConfig, m: ScenarioMatrix) -> Table:
    """First column: portfolio loss ``L``; further columns: ``E[L | S]`` per factor."""
    if m.n_assets < 2:
        raise ValidationError("impact mode needs a loss column followed by at least one E[L|S] column")
    alpha = cfg.measure.alpha if cfg.measure.alpha is not None else 0.999
    table = Table(["factor", "ri_sigma", "ri_var", "ri_es", "qri_es"])
    L = m.values[:, 0]
    for k, name in enumerate(m.asset_names[1:], start=1):
        rep = risk_impact(ConditionalELSample(m.values[:, k], L, name), alpha, cfg.kernel)
        table.add([name, rep.ri_sigma, rep.ri_var, rep.ri_es, rep.qri_es])
    return table


_SCENARIO_RUNNERS: dict[Mode, Callable[[RunConfig, ScenarioMatrix], Table]] = {
    Mode.ALLOC: run_alloc,
    Mode.DIVERS: run_divers,
    Mode.CDO: run_cdo,
    Mode.IMPACT: run_impact,
}


def execute(cfg: RunConfig) -> str:
    """Run ``cfg`` and return the rendered CSV text."""
    if cfg.mode is Mode.FIGURE:
        table, n = run_figure(cfg)
    else:
        assert cfg.scenario_file is not None
        m = load_scenarios(cfg.scenario_file, cfg.convention)
        table, n = _SCENARIO_RUNNERS[cfg.mode](cfg, m), m.n_scenarios
    return table.render(provenance(cfg, n))


def build_parser() -> argparse.ArgumentParser:
    """Argument parser of the ``eulercap`` command."""
    p = argparse.ArgumentParser(prog="eulercap", description="Euler capital allocation reports and figure curves.")
    p.add_argument("mode", choices=[m.value for m in Mode])
    p.add_argument("--figure", choices=[f.value for f in Figure])
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--input", help="scenario CSV (overrides scenario_file)")
    p.add_argument("--scenarios", help="Monte Carlo sample size")
    p.add_argument("--seed")
    p.add_argument("--alpha")
    p.add_argument("--c")
    p.add_argument("--measure", choices=["std", "var", "es", "ul_var", "ul_es"])
    p.add_argument("--grid", help="start:stop:step")
    p.add_argument("--bandwidth", help="positive number or 'silverman'")
    p.add_argument("--rescale-var-contrib", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="output path (default: stdout)")
    return p


_OVERRIDES = {"scenarios": "scenarios", "seed": "seed", "alpha": "alpha", "c": "c",
              "measure": "measure", "grid": "grid", "bandwidth": "bandwidth", "input": "scenario_file"}


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line; returns the process exit code."""
    args = build_parser().parse_args(argv)
    try:
        raw = read_config_file(args.config) if args.config else {}
        for attr, key in _OVERRIDES.items():
            value = getattr(args, attr)
            if value is not None:
                raw[key] = str(value)
        cfg = build_config(args.mode, raw, figure=args.figure,
                           rescale_var_contrib=args.rescale_var_contrib,
                           workers=args.workers, out=args.out)
        text = execute(cfg)
        if cfg.out:
            with open(cfg.out, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except ValidationError as exc:
        print(f"eulercap: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"eulercap: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except DegeneracyError as exc:
        print(f"eulercap: degenerate computation: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
