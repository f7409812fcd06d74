"""Linewidth sweeps over the interaction strength, CSV and SVG output."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytics import (linewidth_branches_nofb, linewidth_fb, linewidth_quadrature_nofb,
                        optimal_feedback)
from .liouville import linewidth_numeric
from .model import ConfigError, ModelParams, SolverError
from .svgplot import loglog_svg

MODES = ("nofb-analytic", "nofb-numeric", "fb-analytic", "fb-numeric")
SCHEMA = 1
COLUMNS = ("chi", "nofb_analytic", "nofb_numeric", "fb_analytic", "fb_numeric",
           "nofb_quadrature", "nu", "lambda", "omega0_nofb", "omega0_fb", "dim",
           "tail_population", "residual", "flags", "error")


def default_chi_grid(lo: float = 0.5, hi: float = 100.0, points: int = 25) -> tuple:
    return tuple(float(x) for x in np.geomspace(lo, hi, points))


@dataclass(frozen=True)
class SweepConfig:
    mu: float = 60.0
    kappa: float = 1.0
    eta: float = 1.0
    chi_grid: tuple = field(default_factory=default_chi_grid)
    modes: tuple = MODES
    # "optimal", or explicit measurement/feedback strengths via nu and lam
    feedback_rule: str = "optimal"
    nu: float | None = None
    lam: float | None = None
    dim: int | None = None
    timedomain: bool = False

    def __post_init__(self):
        grid = tuple(float(c) for c in self.chi_grid)
        object.__setattr__(self, "chi_grid", grid)
        object.__setattr__(self, "modes", tuple(self.modes))
        if not grid or any(c <= 0 for c in grid):
            raise ConfigError("chi_grid must contain positive values")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("chi_grid must be strictly increasing")
        if not self.modes or not set(self.modes) <= set(MODES):
            raise ConfigError(f"modes must be a non-empty subset of {MODES}")
        if self.feedback_rule not in ("optimal", "explicit"):
            raise ConfigError("feedback_rule must be 'optimal' or 'explicit'")
        if self.feedback_rule == "explicit" and (self.nu is None or self.lam is None):
            raise ConfigError("explicit feedback needs nu and lam")
        ModelParams(kappa=self.kappa, mu=self.mu, eta=self.eta)


def feedback_strengths(chi: float, eta: float, rule: str = "optimal", nu=None, lam=None):
    """``(nu, lam, flags)`` for one interaction strength.

    Below the feedback threshold the optimal rule switches feedback off.
    """
    if rule == "explicit":
        return float(nu), float(lam), ()
    try:
        opt = optimal_feedback(chi, eta)
    except ConfigError:
        return 0.0, 0.0, ("feedback_below_threshold",)
    return opt.nu, opt.lam, ()


@dataclass
class SweepRow:
    chi: float
    values: dict = field(default_factory=dict)
    nofb_quadrature: float | None = None
    nu: float | None = None
    lam: float | None = None
    omega0_nofb: float | None = None
    omega0_fb: float | None = None
    dim: int | None = None
    tail_population: float | None = None
    residual: float | None = None
    flags: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    def as_record(self) -> dict:
        rec = {"chi": self.chi, "nofb_quadrature": self.nofb_quadrature, "nu": self.nu,
               "lambda": self.lam, "omega0_nofb": self.omega0_nofb,
               "omega0_fb": self.omega0_fb, "dim": self.dim,
               "tail_population": self.tail_population, "residual": self.residual,
               "flags": ";".join(self.flags), "error": "; ".join(self.errors)}
        for mode in MODES:
            rec[mode.replace("-", "_")] = self.values.get(mode)
        return rec


def compute_row(config: SweepConfig, chi: float) -> SweepRow:
    base = ModelParams(kappa=config.kappa, mu=config.mu, chi=chi, eta=config.eta)
    nu, lam, fb_flags = feedback_strengths(chi, config.eta, config.feedback_rule,
                                           config.nu, config.lam)
    fb = base.replace(nu=nu, lam=lam)
    row = SweepRow(chi=chi, nu=nu, lam=lam, flags=list(fb_flags))
    row.nofb_quadrature = linewidth_quadrature_nofb(base).ell
    if "nofb-analytic" in config.modes:
        row.values["nofb-analytic"] = linewidth_branches_nofb(base).selected
    if "fb-analytic" in config.modes:
        res = linewidth_fb(fb)
        row.values["fb-analytic"] = res.ell
        row.flags.extend(res.flags)
    tails, residuals = [], []
    for mode, params, attr in (("nofb-numeric", base, "omega0_nofb"),
                               ("fb-numeric", fb, "omega0_fb")):
        if mode not in config.modes:
            continue
        try:
            res = linewidth_numeric(params, dim=config.dim, timedomain=config.timedomain)
        except (SolverError, ConfigError) as exc:
            row.values[mode] = None
            row.errors.append(f"{mode}: {exc}")
            continue
        row.values[mode] = res.ell
        setattr(row, attr, res.omega0)
        row.dim = res.diagnostics["dim"]
        tails.append(res.diagnostics["tail_population"])
        residuals.append(res.diagnostics["residual_norm"])
        row.flags.extend(f"{mode}:{f}" for f in res.flags)
        if config.timedomain:
            diff = res.diagnostics["timedomain_rel_diff"]
            if diff > 0.02:
                row.flags.append(f"{mode}:timedomain_disagrees")
    if tails:
        row.tail_population = max(tails)
        row.residual = max(residuals)
    return row


def run_sweep(config: SweepConfig, workers: int = 1) -> list:
    """One row per grid point, returned in grid order."""
    if workers <= 1:
        return [compute_row(config, chi) for chi in config.chi_grid]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(compute_row, [config] * len(config.chi_grid), config.chi_grid))


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "" if not math.isfinite(value) else repr(float(value))
    return str(value)


def rows_to_csv(rows: list) -> str:
    buf = io.StringIO()
    buf.write(f"#schema={SCHEMA}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        rec = row.as_record()
        writer.writerow([_fmt(rec[c]) for c in COLUMNS])
    return buf.getvalue()


def read_csv(path) -> list:
    """Rows of a sweep CSV as dicts of floats (empty fields become None)."""
    with open(path, newline="", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != f"#schema={SCHEMA}":
            raise ValueError(f"unsupported sweep CSV header {header!r}")
        out = []
        for rec in csv.DictReader(fh):
            parsed = {}
            for k, v in rec.items():
                if k in ("flags", "error"):
                    parsed[k] = v
                else:
                    parsed[k] = float(v) if v != "" else None
            out.append(parsed)
    return out


def rows_to_svg(rows: list, config: SweepConfig, timestamp: bool = True) -> str:
    chis = [r.chi for r in rows]
    series = {}
    for mode in config.modes:
        style = "markers" if mode.endswith("numeric") else "line"
        series[mode] = (chis, [r.values.get(mode) for r in rows], style)
    title = f"linewidth vs chi (mu={config.mu:g}, kappa={config.kappa:g}, eta={config.eta:g})"
    return loglog_svg(series, "chi", "linewidth", title, timestamp=timestamp)
