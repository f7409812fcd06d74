"""Command-line front end: ``atomlaser {linewidth,sweep,params,validate}``.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 solver error, 4 validity failure under ``--strict``.  Errors are printed to
stdout as ``{"error": {"type": ..., "exit_code": ..., "message": ...}}``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import analytics
from .liouville import linewidth_numeric
from .model import ConfigError, ModelParams, SolverError
from .physical import (AMU, CondensateLabParams, ProbeLabParams, beam_covers_condensate,
                       collision_strength_tf, dimensionless_bridge, measurement_strength,
                       probe_phase_shift, required_beam_power, spontaneous_loss_ratio)
from .sweep import MODES, SweepConfig, default_chi_grid, rows_to_csv, rows_to_svg, run_sweep
from .validation import run_checks

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_SOLVER, EXIT_STRICT = 0, 1, 2, 3, 4
LOSS_RATIO_ACCEPTABLE = 0.5


class StrictFailure(Exception):
    pass


def _emit(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False))


def _error(kind: str, code: int, message: str) -> int:
    _emit({"error": {"type": kind, "exit_code": code, "message": message}})
    return code


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _merged(args, config: dict, keys) -> dict:
    """Config values overridden by any CLI flag that was given."""
    out = {k: config[k] for k in keys if k in config}
    for k in keys:
        value = getattr(args, k, None)
        if value is not None:
            out[k] = value
    return out


def _finite(obj):
    """Replace non-finite floats by None so the JSON stays strict."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


# --- linewidth ---------------------------------------------------------------

def _feedback_from(cfg: dict, chi: float, eta: float):
    rule = cfg.get("feedback")
    has_explicit = cfg.get("nu") is not None or cfg.get("lambda") is not None
    if rule is None:
        rule = "explicit" if has_explicit else "none"
    if rule == "none":
        return 0.0, 0.0, []
    if rule == "explicit":
        return float(cfg.get("nu") or 0.0), float(cfg.get("lambda") or 0.0), []
    if rule == "optimal":
        try:
            opt = analytics.optimal_feedback(chi, eta)
        except ConfigError:
            return 0.0, 0.0, ["feedback_below_threshold"]
        return opt.nu, opt.lam, []
    raise ConfigError(f"unknown feedback rule {rule!r}")


def cmd_linewidth(args) -> int:
    cfg = _merged(args, _load_config(args.config),
                  ("mu", "kappa", "chi", "nu", "lambda", "eta", "feedback", "dim", "timedomain"))
    chi = float(cfg.get("chi", 0.0))
    eta = float(cfg.get("eta", 1.0))
    nu, lam, flags = _feedback_from(cfg, chi, eta)
    params = ModelParams(kappa=float(cfg.get("kappa", 1.0)), mu=float(cfg.get("mu", 60.0)),
                         chi=chi, nu=nu, lam=lam, eta=eta)
    dim = cfg.get("dim")
    result = linewidth_numeric(params, dim=int(dim) if dim is not None else None,
                               timedomain=bool(cfg.get("timedomain", False)))
    if params.has_feedback:
        analytic = analytics.linewidth_fb(params)
        analytic_report = {"ell": analytic.ell, "validity": analytic.diagnostics}
    else:
        b = analytics.linewidth_branches_nofb(params)
        analytic_report = {"ell": b.selected, "small_chi": b.small_chi, "large_chi": b.large_chi,
                           "crossover_chi": b.crossover_chi,
                           "quadrature": analytics.linewidth_quadrature_nofb(params).ell}
        analytic = None
    report = result.to_dict()
    report["flags"] = flags + report["flags"] + list(analytic.flags if analytic else [])
    report["params"] = {"kappa": params.kappa, "mu": params.mu, "chi": params.chi,
                        "nu": params.nu, "lambda": params.lam, "eta": params.eta}
    report["analytic"] = analytic_report
    # under --strict a failing run prints only the error, keeping stdout one JSON document
    if args.strict and any(f.startswith(("invalid_", "tail_")) for f in report["flags"]):
        raise StrictFailure("validity flags raised: " + ", ".join(report["flags"]))
    _emit(_finite(report))
    return EXIT_OK


# --- sweep -------------------------------------------------------------------

def cmd_sweep(args) -> int:
    cfg = _merged(args, _load_config(args.config),
                  ("mu", "kappa", "eta", "chi_grid", "modes", "feedback", "nu", "lambda", "dim",
                   "timedomain", "csv", "svg", "workers", "points", "chi_min", "chi_max"))
    grid = cfg.get("chi_grid")
    if grid is None:
        grid = default_chi_grid(float(cfg.get("chi_min", 0.5)), float(cfg.get("chi_max", 100.0)),
                                int(cfg.get("points", 25)))
    feedback = cfg.get("feedback")
    if isinstance(feedback, dict):
        cfg.setdefault("nu", feedback.get("nu"))
        cfg.setdefault("lambda", feedback.get("lambda"))
        feedback = "explicit"
    if feedback is None:
        feedback = "explicit" if cfg.get("nu") is not None else "optimal"
    config = SweepConfig(mu=float(cfg.get("mu", 60.0)), kappa=float(cfg.get("kappa", 1.0)),
                         eta=float(cfg.get("eta", 1.0)), chi_grid=tuple(grid),
                         modes=tuple(cfg.get("modes", MODES)), feedback_rule=feedback,
                         nu=cfg.get("nu"), lam=cfg.get("lambda"), dim=cfg.get("dim"),
                         timedomain=bool(cfg.get("timedomain", False)))
    rows = run_sweep(config, workers=int(cfg.get("workers", 1)))
    text = rows_to_csv(rows)
    if cfg.get("csv"):
        Path(cfg["csv"]).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if cfg.get("svg"):
        Path(cfg["svg"]).write_text(rows_to_svg(rows, config, timestamp=not args.no_timestamp),
                                    encoding="utf-8")
    failed = [r.chi for r in rows if r.errors]
    if args.strict and (failed or any(f.startswith("invalid_") for r in rows for f in r.flags)):
        raise StrictFailure("sweep has failed points or validity flags")
    if cfg.get("csv"):
        _emit({"rows": len(rows), "failed_points": failed, "csv": cfg["csv"],
               "svg": cfg.get("svg")})
    return EXIT_OK


# --- params ------------------------------------------------------------------

def _condensate(d: dict) -> CondensateLabParams:
    d = dict(d)
    if "atom_mass_amu" in d:
        d["atom_mass"] = d.pop("atom_mass_amu") * AMU
    if "trap_freqs_hz" in d:
        d["trap_freqs"] = tuple(2 * math.pi * f for f in d.pop("trap_freqs_hz"))
    try:
        return CondensateLabParams(**d)
    except TypeError as exc:
        raise ConfigError(f"condensate parameters: {exc}")


def _probe(d: dict) -> ProbeLabParams:
    try:
        return ProbeLabParams(**d)
    except TypeError as exc:
        raise ConfigError(f"probe parameters: {exc}")


def params_report(cfg: dict) -> dict:
    """Feasibility report for one set of laboratory parameters."""
    if "condensate" not in cfg or "probe" not in cfg:
        raise ConfigError("params config needs 'condensate' and 'probe' sections")
    cond = _condensate(cfg["condensate"])
    probe = _probe(cfg["probe"])
    eta = float(cfg.get("eta", 1.0))
    mu = cond.atom_number
    C_res = collision_strength_tf(cond)
    C = C_res.C
    if "chi" in cfg:
        chi = float(cfg["chi"])
        kappa = 4 * mu * C / chi
        chi_source = "config"
    else:
        if "kappa" not in cfg:
            raise ConfigError("params config needs 'kappa' (output rate, s^-1) or 'chi'")
        kappa = float(cfg["kappa"])
        chi = dimensionless_bridge(C, 0.0, kappa, mu)[0]
        chi_source = "derived"
    phase = probe_phase_shift(probe, mu)
    N_target = C / math.sqrt(eta)
    power = required_beam_power(probe, phase.theta, N_target)
    nu_target = dimensionless_bridge(0.0, N_target, kappa, mu)[1]
    model = ModelParams(kappa=kappa, mu=mu, chi=chi, eta=eta)
    nofb = analytics.linewidth_branches_nofb(model)
    report = {
        "collision_strength_C": C,
        "quartic_integral": C_res.quartic_integral,
        "chemical_potential_J": cond.chemical_potential,
        "tf_radii_m": list(cond.tf_radii),
        "kappa": kappa,
        "chi": chi,
        "chi_source": chi_source,
        "theta": phase.theta,
        "sqrt_mu_theta": phase.sqrt_mu_theta,
        "measurement_target_N": N_target,
        "required_beam_power_W": power,
        "nu_target": nu_target,
        "ell_nofb": nofb.selected,
        "ell_nofb_branches": {"small_chi": nofb.small_chi, "large_chi": nofb.large_chi},
        "standard_linewidth": kappa / (2 * mu),
        "output_flux": kappa * mu,
        "spontaneous_loss_ratio": spontaneous_loss_ratio(probe, chi, mu),
    }
    try:
        opt = analytics.optimal_feedback(chi, eta)
        report.update(lambda_opt=opt.lam, nu_opt=opt.nu, ell_fb=opt.ell_min(kappa, mu),
                      reduction_factor=nofb.selected / opt.ell_min(kappa, mu))
    except ConfigError:
        report.update(lambda_opt=0.0, nu_opt=0.0, ell_fb=nofb.selected, reduction_factor=1.0)
    if probe.beam_power > 0:
        ms = measurement_strength(probe, phase.theta, kappa, mu)
        report.update(beam_power_N=ms.N, beam_power_nu=ms.nu)
    report["flags"] = {
        "tf_valid": cond.tf_valid,
        "small_phase": phase.small_phase,
        "far_detuned": probe.far_detuned,
        "beam_covers_condensate": beam_covers_condensate(probe, cond),
        "loss_ratio_acceptable": report["spontaneous_loss_ratio"] < LOSS_RATIO_ACCEPTABLE,
        "coherent_without_feedback": nofb.selected < kappa * mu,
        "coherent_with_feedback": report["ell_fb"] < kappa * mu,
    }
    return report


def cmd_params(args) -> int:
    if args.config is None:
        raise ConfigError("params requires --config <path>")
    report = params_report(_load_config(args.config))
    if args.strict and not all(report["flags"].values()):
        bad = [k for k, v in report["flags"].items() if not v]
        raise StrictFailure("failed flags: " + ", ".join(bad))
    _emit(_finite(report))
    return EXIT_OK


# --- validate ----------------------------------------------------------------

def cmd_validate(args) -> int:
    results = run_checks(mismatched_vectorization=args.debug_mismatched_vectorization)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<26} {r.detail}")
    ok = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return EXIT_OK if ok else EXIT_VALIDATION


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its fields")
    common.add_argument("--strict", action="store_true",
                        help="exit 4 when validity flags fail")
    common.add_argument("--dim", type=int, help="Fock-space truncation")
    common.add_argument("--workers", type=int, help="parallel sweep workers")
    common.add_argument("--svg", help="write an SVG plot here")
    common.add_argument("--no-timestamp", action="store_true",
                        help="omit the timestamp comment from SVG output")

    parser = argparse.ArgumentParser(prog="atomlaser", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def model_flags(p, with_chi=True):
        p.add_argument("--mu", type=float)
        p.add_argument("--kappa", type=float)
        p.add_argument("--eta", type=float)
        if with_chi:
            p.add_argument("--chi", type=float)
        p.add_argument("--nu", type=float)
        p.add_argument("--lambda", dest="lambda", type=float)
        p.add_argument("--feedback", choices=("none", "optimal", "explicit"))
        p.add_argument("--timedomain", action="store_true", default=None,
                       help="also integrate g1(t) and report the time-domain coherence time")

    p = sub.add_parser("linewidth", parents=[common], help="single-point numerical linewidth")
    model_flags(p)
    p.set_defaults(func=cmd_linewidth)

    p = sub.add_parser("sweep", parents=[common], help="linewidth versus chi")
    model_flags(p, with_chi=False)
    p.add_argument("--chi-grid", dest="chi_grid", type=lambda s: [float(x) for x in s.split(",")],
                   help="comma-separated chi values")
    p.add_argument("--chi-min", dest="chi_min", type=float)
    p.add_argument("--chi-max", dest="chi_max", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--modes", type=lambda s: s.split(","), help=f"subset of {','.join(MODES)}")
    p.add_argument("--csv", help="CSV output path (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("params", parents=[common], help="laboratory feasibility report")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("validate", parents=[common], help="run the built-in oracle checks")
    p.add_argument("--debug-mismatched-vectorization", action="store_true",
                   help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.dim is not None and args.dim < 2:
        return _error("config_error", EXIT_CONFIG, "--dim must be >= 2")
    try:
        return args.func(args)
    except ConfigError as exc:
        return _error("config_error", EXIT_CONFIG, str(exc))
    except SolverError as exc:
        return _error("solver_error", EXIT_SOLVER, str(exc))
    except StrictFailure as exc:
        return _error("strict_validity", EXIT_STRICT, str(exc))


if __name__ == "__main__":
    sys.exit(main())
