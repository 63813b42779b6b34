"""Experiment front end: `pitik <subcommand> --config <path>`.

Each subcommand reads a flat key = value configuration, runs one study,
and writes plot-ready CSV plus a summary.json into the output directory.
All floats are serialized with 17 significant digits, and identical
config + seed reproduce every output byte for byte.
"""

from __future__ import annotations

import argparse
import os
from typing import Optional

import numpy as np

from .concentration import (
    estimate_Cconc,
    expectation_study,
    tail_table,
    truncation_remainder,
)
from .domain import integrate, l2_norm
from .harness import (
    ExperimentConfig,
    dumps17,
    parse_config,
    run_apriori_study,
    run_lepskii_study,
    write_lepskii_csv,
    write_rates_csv,
    write_tail_csv,
)
from .harness import _fmt17
from .operators import certified_vsc
from .penalties import bregman
from .process import sample_binned, sample_poisson, write_point_csv
from .ratecalc import (
    apriori_alpha,
    conjugate_neg,
    conjugate_neg_numeric,
    holder,
    logarithmic,
)
from .solver import minimize_tikhonov, objective

SLOPE_TOL = 0.15


def _load(args) -> ExperimentConfig:
    with open(args.config) as fh:
        values = parse_config(fh.read())
    if args.seed is not None:
        values["seed"] = int(args.seed)
    return ExperimentConfig(values)


def _outdir(args, cfg: ExperimentConfig) -> str:
    out = args.out or str(cfg.get("out", "."))
    os.makedirs(out, exist_ok=True)
    return out


def _write_summary(out: str, payload: dict) -> None:
    with open(os.path.join(out, "summary.json"), "w") as fh:
        fh.write(dumps17(payload) + "\n")


def _scenario_gdag(cfg: ExperimentConfig):
    # direct intensity if configured, else the forward image of the truth
    dom = cfg.domain()
    if "gdag.kind" in cfg.values:
        return dom, cfg.gdag(dom)
    inst = cfg.source(cfg.operator(dom))
    return dom, inst.gdag


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _outdir(args, cfg)
    dom, gdag = _scenario_gdag(cfg)
    t = float(cfg.require("t"))
    rng = np.random.default_rng(cfg.seed())
    data = sample_poisson(gdag, t, rng)
    write_point_csv(os.path.join(out, "points.csv"), data)
    _write_summary(
        out,
        {
            "t": t,
            "points": data.count,
            "intensity_mass": integrate(gdag),
            "seed": cfg.seed(),
        },
    )
    return 0


def cmd_solve(args) -> int:
    cfg = _load(args)
    out = _outdir(args, cfg)
    dom = cfg.domain()
    op = cfg.operator(dom)
    inst = cfg.source(op)
    pen = cfg.penalty(dom)
    sigma = cfg.sigma()
    t = float(cfg.require("t"))
    if "alpha" in cfg.values:
        alpha = float(cfg.require("alpha"))
    else:
        phi = certified_vsc(
            inst,
            float(cfg.get("penalty.box_lo", 0.0)),
            float(cfg.get("penalty.box_hi", np.inf)),
            sigma,
        )
        alpha = apriori_alpha(phi, t, float(cfg.get("alpha.C_err", 1.0)))
    rng = np.random.default_rng(cfg.seed())
    data = sample_binned(inst.gdag, t, rng)
    rec = minimize_tikhonov(op, data, sigma, alpha, pen, cfg.solver_options())
    obj_dag = objective(op, data, sigma, alpha, pen, inst.udag)
    xs = dom.cell_centers()[0] if dom.d == 1 else None
    with open(os.path.join(out, "solution.csv"), "w") as fh:
        fh.write("cell,x,u_alpha,u_dag\n")
        for i in range(dom.ncells):
            x = _fmt17(xs[i]) if xs is not None else ""
            fh.write(
                f"{i},{x},{_fmt17(rec.u_alpha.values[i])},{_fmt17(inst.udag.values[i])}\n"
            )
    _write_summary(
        out,
        {
            "t": t,
            "alpha": alpha,
            "objective": rec.objective,
            "iterations": rec.iterations,
            "converged": rec.converged,
            "kkt_residual": rec.kkt_residual,
            "bregman_error": bregman(pen, rec.u_alpha, inst.udag),
            "l2_error": l2_norm(rec.u_alpha - inst.udag),
            "minimizer_ok": rec.objective <= obj_dag + 1e-9 * (1.0 + abs(obj_dag)),
        },
    )
    return 0


def _rate_summary(report) -> dict:
    gap = abs(report.slope - report.predicted_exponent)
    return {
        "slope": report.slope,
        "intercept": report.intercept,
        "r2": report.r2,
        "predicted_exponent": report.predicted_exponent,
        "regressor": report.regressor,
        "slope_within_tolerance": bool(gap <= SLOPE_TOL),
        "minimizer_fraction": report.minimizer_fraction,
        "bound_violations": report.bound_violations,
        "replicates": report.replicates,
        "excluded": [int(e) for e in report.excluded],
        "t": list(report.t),
        "mean_bregman": list(report.mean_error),
        "raw_mean_bregman": list(report.raw_mean_error),
        "stderr": list(report.stderr),
        "alpha": list(report.alphas),
    }


def cmd_apriori(args) -> int:
    cfg = _load(args)
    out = _outdir(args, cfg)
    report = run_apriori_study(cfg)
    write_rates_csv(os.path.join(out, "rates.csv"), report)
    summary = _rate_summary(report)
    summary["pass"] = bool(
        summary["slope_within_tolerance"] and report.minimizer_fraction == 1.0
    )
    _write_summary(out, summary)
    return 0


def cmd_lepskii(args) -> int:
    cfg = _load(args)
    out = _outdir(args, cfg)
    study = run_lepskii_study(cfg)
    report = study.report
    write_rates_csv(os.path.join(out, "rates.csv"), report)
    write_lepskii_csv(os.path.join(out, "lepskii.csv"), study.demo_rows)
    r = float(cfg.get("lepskii.r", np.sqrt(2.0)))
    cap = 1.5 * (3.0 * r) ** 2
    eff = np.asarray(study.efficiency, dtype=float)
    frac = float(np.mean(eff <= cap)) if eff.size else 0.0
    selected = [row["j"] for row in study.demo_rows if row["selected"]]
    oracle_j = int(np.argmin([row["l2_error"] for row in study.demo_rows]) + 1)
    summary = _rate_summary(report)
    summary.update(
        {
            "q": study.q,
            "efficiency_cap": cap,
            "efficiency_fraction_within_cap": frac,
            "efficiency_median": float(np.median(eff)),
            "j_bal": selected[0] if selected else None,
            "oracle_index": oracle_j,
            "demo_efficiency": (
                study.demo_rows[selected[0] - 1]["l2_error"] ** study.q
                / study.demo_rows[oracle_j - 1]["l2_error"] ** study.q
                if selected
                else None
            ),
            "pass": bool(
                abs(report.slope - report.predicted_exponent) <= SLOPE_TOL
                and frac >= 0.95
            ),
        }
    )
    _write_summary(out, summary)
    return 0


def cmd_concentration(args) -> int:
    cfg = _load(args)
    out = _outdir(args, cfg)
    dom, gdag = _scenario_gdag(cfg)
    s = float(cfg.require("concentration.s"))
    R = float(cfg.require("concentration.R"))
    J: Optional[int] = None
    if "concentration.J" in cfg.values:
        J = int(cfg.require("concentration.J"))
    t_grid = [float(t) for t in cfg.t_grid()]
    reps = cfg.replicates()
    seed = cfg.seed()
    study = expectation_study(gdag, s, R, t_grid, reps, seed, J=J)
    rho_grid = cfg.get("concentration.rho_grid")
    if rho_grid is None:
        rho_grid = tuple(float(x) for x in np.geomspace(0.25, 8.0, 12))
    table = tail_table(gdag, s, R, t_grid, rho_grid, reps, seed, J=J)
    Cconc = estimate_Cconc(table, R)
    write_tail_csv(os.path.join(out, "tails.csv"), table)
    stderrs = study.std_proxy / np.sqrt(study.replicates)
    bound_ok = study.mean_proxy <= study.bound + 2.0 * stderrs
    scaled = study.mean_proxy * np.sqrt(study.t)
    band = float(scaled.max() / scaled.min()) if scaled.min() > 0 else np.inf
    _write_summary(
        out,
        {
            "C_conc": Cconc,
            "c1": study.c1,
            "truncation_remainder": truncation_remainder(s, R, study.J, dom.d),
            "s": s,
            "R": R,
            "J": study.J,
            "replicates": study.replicates,
            "t": list(study.t),
            "mean_proxy": list(study.mean_proxy),
            "std_proxy": list(study.std_proxy),
            "expectation_bound": list(study.bound),
            "expectation_bound_ok": [bool(b) for b in bound_ok],
            "sqrt_t_band_ratio": band,
            "pass": bool(np.all(bound_ok) and band <= 1.2 and np.isfinite(Cconc)),
        },
    )
    return 0


def cmd_conjugate(args) -> int:
    cfg = _load(args)
    out = _outdir(args, cfg)
    family = str(cfg.get("phi.family", "holder"))
    if family == "holder":
        phi = holder(float(cfg.get("phi.C", 1.0)), float(cfg.get("phi.kappa", 0.5)))
    elif family == "logarithmic":
        phi = logarithmic(float(cfg.get("phi.C", 1.0)), float(cfg.get("phi.p", 1.0)))
    else:
        raise ValueError(f"unknown index-function family {family!r}")
    s_lo = float(cfg.get("conjugate.s_lo", 1e-3))
    s_hi = float(cfg.get("conjugate.s_hi", 1e3))
    count = int(cfg.get("conjugate.count", 41))
    if not 0 < s_lo < s_hi or count < 2:
        raise ValueError("conjugate grid needs 0 < s_lo < s_hi and count >= 2")
    mags = np.geomspace(s_lo, s_hi, count)
    worst = 0.0
    with open(os.path.join(out, "conjugate.csv"), "w") as fh:
        fh.write("s,numeric,closed_form,abs_diff\n")
        for mag in mags:
            sv = -float(mag)
            num = conjugate_neg_numeric(phi, sv)
            closed = conjugate_neg(phi, sv)
            diff = abs(num - closed)
            worst = max(worst, diff)
            fh.write(f"{_fmt17(sv)},{_fmt17(num)},{_fmt17(closed)},{_fmt17(diff)}\n")
    _write_summary(
        out,
        {
            "family": family,
            "count": count,
            "max_abs_diff": worst,
            "pass": bool(worst <= 1e-8),
        },
    )
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "solve": cmd_solve,
    "apriori": cmd_apriori,
    "lepskii": cmd_lepskii,
    "concentration": cmd_concentration,
    "conjugate": cmd_conjugate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pitik",
        description="Poisson inverse problem rate and concentration studies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, help="flat key = value file")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="output directory")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
