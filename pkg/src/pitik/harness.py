"""Monte Carlo rate studies, configuration, and report serialization.

Randomness discipline: every study derives its streams from the master
seed as seed + 1000003 * t_index for the exposure block, and splits
replicates off that block seed through `replicate_seed`.  Identical
config and seed therefore reproduce reports exactly.
"""

import json
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .domain import Domain, GridFunction, constant, from_callable, l2_norm
from .fidelity import noise_functional_Z
from .lepskii import alpha_sequence, balance, oracle_best, psi_values
from .operators import (
    FourierMultiplierOperator,
    SourceInstance,
    certified_vsc,
    make_source_instance,
    spectral_diagonal,
)
from .penalties import Penalty, bregman, entropy, quadratic
from .process import replicate_seed, sample_binned
from .ratecalc import ErrorBudget, IndexFunction, apriori_alpha, deterministic_bound
from .solver import Reconstruction, SolverOptions, minimize_tikhonov, objective

__all__ = [
    "ExperimentConfig",
    "RateReport",
    "LepskiiStudy",
    "ClassicalReport",
    "parse_config",
    "load_config",
    "fit_loglog_slope",
    "run_apriori_study",
    "run_lepskii_study",
    "run_classical_study",
    "dumps17",
    "write_rates_csv",
    "write_lepskii_csv",
    "write_tail_csv",
]

_T_STRIDE = 1000003

# flat key = value configuration; every recognized key with its converter


def _float_list(text: str) -> Tuple[float, ...]:
    vals = tuple(float(p) for p in text.split(","))
    if not vals:
        raise ValueError("empty list value")
    return vals


_KEYS = {
    "domain.d": int,
    "domain.n": int,
    "operator.kind": str,
    "operator.decay": float,
    "operator.background": float,
    "penalty.kind": str,
    "penalty.center": float,
    "penalty.box_lo": float,
    "penalty.box_hi": float,
    "source.family": str,
    "source.order": float,
    "source.scale": float,
    "source.seed": int,
    "source.band_lo": int,
    "source.band_hi": int,
    "source.profile_decay": float,
    "source.phases": str,
    "source.phi_scale": float,
    "sigma": float,
    "t": float,
    "t_grid": _float_list,
    "replicates": int,
    "seed": int,
    "alpha": float,
    "alpha.C_err": float,
    "solver.max_iterations": int,
    "solver.rel_tolerance": float,
    "lepskii.r": float,
    "lepskii.tau": float,
    "lepskii.q": float,
    "lepskii.C_bd": float,
    "gdag.kind": str,
    "gdag.amplitude": float,
    "concentration.s": float,
    "concentration.R": float,
    "concentration.J": int,
    "concentration.rho_grid": _float_list,
    "classical.delta_grid": _float_list,
    "phi.family": str,
    "phi.C": float,
    "phi.kappa": float,
    "phi.p": float,
    "conjugate.s_lo": float,
    "conjugate.s_hi": float,
    "conjugate.count": int,
    "out": str,
}


def parse_config(text: str) -> Dict[str, object]:
    """Flat `key = value` lines; # comments; unknown or repeated keys fail."""
    out: Dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ValueError(f"line {lineno}: repeated key {key!r}")
        try:
            out[key] = _KEYS[key](value)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Typed view of a parsed configuration with scenario builders."""

    values: Dict[str, object]

    def __post_init__(self):
        for key in self.values:
            if key not in _KEYS:
                raise ValueError(f"unknown key {key!r}")
        grid = self.values.get("t_grid")
        if grid is not None:
            arr = np.asarray(grid, dtype=float)
            if np.any(arr <= 0) or np.any(np.diff(arr) <= 0):
                raise ValueError("t_grid must be positive and increasing")
        reps = self.values.get("replicates")
        if reps is not None and reps < 10:
            raise ValueError("need at least 10 replicates")

    def get(self, key: str, default=None):
        if key not in _KEYS:
            raise KeyError(f"unknown key {key!r}")
        return self.values.get(key, default)

    def require(self, key: str):
        if key not in self.values:
            raise ValueError(f"missing required key {key!r}")
        return self.values[key]

    # scenario builders

    def domain(self) -> Domain:
        return Domain(int(self.get("domain.d", 1)), int(self.require("domain.n")))

    def operator(self, dom: Domain) -> FourierMultiplierOperator:
        kind = self.get("operator.kind", "spectral")
        if kind != "spectral":
            raise ValueError(f"unsupported operator kind {kind!r} in configs")
        return spectral_diagonal(
            dom,
            float(self.require("operator.decay")),
            background=float(self.get("operator.background", 0.0)),
        )

    def penalty(self, dom: Domain) -> Penalty:
        kind = self.get("penalty.kind", "quadratic")
        lo = float(self.get("penalty.box_lo", 0.0))
        hi = float(self.get("penalty.box_hi", np.inf))
        if kind == "quadratic":
            center = float(self.get("penalty.center", 0.0))
            return quadratic(constant(dom, center), box_lo=lo, box_hi=hi)
        if kind == "entropy":
            return entropy(box_lo=lo, box_hi=hi)
        raise ValueError(f"unknown penalty kind {kind!r}")

    def source(self, op: FourierMultiplierOperator) -> SourceInstance:
        dom = op.domain
        band = None
        if "source.band_lo" in self.values or "source.band_hi" in self.values:
            band = (
                int(self.get("source.band_lo", 1)),
                int(self.require("source.band_hi")),
            )
        return make_source_instance(
            op,
            str(self.require("source.family")),
            float(self.require("source.order")),
            int(self.get("source.seed", 0)),
            float(self.get("source.scale", 1.0)),
            u0=constant(dom, float(self.get("penalty.center", 0.0))),
            box_lo=float(self.get("penalty.box_lo", 0.0)),
            band=band,
            profile_decay=float(self.get("source.profile_decay", 1.0)),
            phases=str(self.get("source.phases", "random")),
            phi_scale=float(self.get("source.phi_scale", 1.0)),
        )

    def gdag(self, dom: Domain) -> GridFunction:
        """Direct intensity for sampling studies that bypass the operator."""
        kind = str(self.get("gdag.kind", "wave"))
        amp = float(self.get("gdag.amplitude", 0.5))
        if kind == "constant":
            if amp <= 0:
                raise ValueError("constant intensity must be positive")
            return constant(dom, amp)
        if kind != "wave":
            raise ValueError(f"unknown gdag kind {kind!r}")
        if dom.d != 1 or not 0 <= amp < 1:
            raise ValueError("wave intensity needs d = 1 and amplitude in [0, 1)")
        return from_callable(dom, lambda x: 1.0 + amp * np.sin(2.0 * np.pi * x))

    def solver_options(self) -> SolverOptions:
        return SolverOptions(
            max_iterations=int(self.get("solver.max_iterations", 5000)),
            rel_tolerance=float(self.get("solver.rel_tolerance", 1e-8)),
        )

    def t_grid(self) -> np.ndarray:
        return np.asarray(self.require("t_grid"), dtype=float)

    def replicates(self) -> int:
        return int(self.require("replicates"))

    def seed(self) -> int:
        return int(self.get("seed", 0))

    def sigma(self) -> float:
        return float(self.require("sigma"))


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig(parse_config(fh.read()))


def fit_loglog_slope(
    points: Sequence[Tuple[float, float]]
) -> Tuple[float, float, float]:
    """Least squares of ln y on ln x; returns (slope, intercept, r2)."""
    pts = list(points)
    if len(pts) < 3:
        raise ValueError("need at least 3 points for a slope fit")
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts], dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive coordinates")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


@dataclass(frozen=True)
class RateReport:
    t: np.ndarray
    mean_error: np.ndarray  # trimmed means, the slope estimator
    raw_mean_error: np.ndarray
    stderr: np.ndarray
    excluded: np.ndarray
    replicates: int
    slope: float
    intercept: float
    r2: float
    predicted_exponent: float
    regressor: str
    minimizer_fraction: float
    bound_violations: int
    alphas: np.ndarray


def _trimmed(vals: np.ndarray) -> float:
    return float(stats.trim_mean(vals, 0.02))


def _exclusion_gate(excluded: np.ndarray, total: int) -> None:
    rate = float(np.sum(excluded)) / total
    if rate > 0.05:
        raise RuntimeError(f"exclusion rate {rate:.1%} exceeds 5%")


def run_apriori_study(cfg: ExperimentConfig) -> RateReport:
    """Bregman error of the a-priori rule across the exposure grid.

    alpha comes from the certified smoothness of the constructed source
    (exact for the order-1/2 family), the error level is 1/sqrt(t).
    Non-converged solves are excluded and counted; the study fails if
    they exceed 5% overall.
    """
    dom = cfg.domain()
    op = cfg.operator(dom)
    inst = cfg.source(op)
    pen = cfg.penalty(dom)
    sigma = cfg.sigma()
    opts = cfg.solver_options()
    C_err = float(cfg.get("alpha.C_err", 1.0))
    lo = float(cfg.get("penalty.box_lo", 0.0))
    hi = float(cfg.get("penalty.box_hi", np.inf))
    phi = certified_vsc(inst, lo, hi, sigma)
    t_grid = cfg.t_grid()
    reps = cfg.replicates()
    seed = cfg.seed()

    means, raw_means, stderrs, excluded, alphas = [], [], [], [], []
    minimizer_ok = 0
    solves = 0
    violations = 0
    for ti, t in enumerate(t_grid):
        alpha = apriori_alpha(phi, float(t), C_err)
        alphas.append(alpha)
        vals = []
        dropped = 0
        for k in range(reps):
            rng = np.random.default_rng(replicate_seed(seed + _T_STRIDE * ti, k))
            data = sample_binned(inst.gdag, float(t), rng)
            rec = minimize_tikhonov(op, data, sigma, alpha, pen, opts)
            if not rec.converged:
                dropped += 1
                continue
            solves += 1
            breg = bregman(pen, rec.u_alpha, inst.udag)
            vals.append(breg)
            obj_dag = objective(op, data, sigma, alpha, pen, inst.udag)
            if rec.objective <= obj_dag + 1e-9 * (1.0 + abs(obj_dag)):
                minimizer_ok += 1
            # realized-noise surrogate for the error budget; violations are
            # possible when the pairwise bound understates the supremum
            err = 2.0 * max(
                noise_functional_Z(op.apply(rec.u_alpha), data, inst.gdag, sigma),
                noise_functional_Z(inst.gdag, data, inst.gdag, sigma),
            )
            bound = deterministic_bound(phi, ErrorBudget(1.0, err, 1.0), alpha)
            if breg > bound * (1.0 + 1e-9):
                violations += 1
        arr = np.array(vals)
        means.append(_trimmed(arr))
        raw_means.append(float(arr.mean()))
        stderrs.append(float(arr.std(ddof=1) / np.sqrt(len(arr))))
        excluded.append(dropped)
    excluded = np.array(excluded, dtype=int)
    _exclusion_gate(excluded, reps * len(t_grid))
    slope, intercept, r2 = fit_loglog_slope(list(zip(t_grid, means)))
    kappa_exp = inst.predicted_phi.kappa if inst.predicted_phi.family == "holder" else None
    predicted = -0.5 * kappa_exp if kappa_exp is not None else np.nan
    return RateReport(
        t=t_grid,
        mean_error=np.array(means),
        raw_mean_error=np.array(raw_means),
        stderr=np.array(stderrs),
        excluded=excluded,
        replicates=reps,
        slope=slope,
        intercept=intercept,
        r2=r2,
        predicted_exponent=float(predicted),
        regressor="t",
        minimizer_fraction=minimizer_ok / max(solves, 1),
        bound_violations=violations,
        alphas=np.array(alphas),
    )


@dataclass(frozen=True)
class LepskiiStudy:
    report: RateReport
    efficiency: np.ndarray  # pooled over replicates and exposures
    demo_rows: Tuple[dict, ...]  # per-j table for the first replicate, last t
    q: float


def run_lepskii_study(cfg: ExperimentConfig) -> LepskiiStudy:
    """Balancing-principle study: q-power error of the selected index.

    The regressor is ln(t)/sqrt(t), so the predicted exponent is the
    index-function exponent kappa itself.  Efficiency compares the
    selected q-power error to the per-replicate oracle among the solved
    grid.
    """
    dom = cfg.domain()
    op = cfg.operator(dom)
    inst = cfg.source(op)
    pen = cfg.penalty(dom)
    sigma = cfg.sigma()
    opts = cfg.solver_options()
    r = float(cfg.get("lepskii.r", np.sqrt(2.0)))
    tau = float(cfg.require("lepskii.tau"))
    q = float(cfg.get("lepskii.q", 2.0))
    C_bd = float(cfg.get("lepskii.C_bd", 1.0))
    t_grid = cfg.t_grid()
    if np.any(t_grid < np.e):
        raise ValueError("balancing runs need t >= e")
    reps = cfg.replicates()
    seed = cfg.seed()

    means, raw_means, stderrs, excluded, alpha1s = [], [], [], [], []
    minimizer_ok = 0
    solves = 0
    efficiency: List[float] = []
    demo_rows: Tuple[dict, ...] = ()
    for ti, t in enumerate(t_grid):
        alphas, m = alpha_sequence(float(t), tau, r)
        alpha1s.append(alphas[0])
        vals = []
        dropped = 0
        for k in range(reps):
            rng = np.random.default_rng(replicate_seed(seed + _T_STRIDE * ti, k))
            data = sample_binned(inst.gdag, float(t), rng)
            # continuation path: solve from the most regularized end and
            # warm-start each smaller alpha at the previous minimizer
            recs: List[Optional[Reconstruction]] = [None] * m
            ok = True
            init = None
            for j in reversed(range(m)):
                rec = minimize_tikhonov(op, data, sigma, alphas[j], pen, opts, init=init)
                if not rec.converged:
                    ok = False
                    break
                recs[j] = rec
                init = rec.u_alpha
            if not ok:
                dropped += 1
                continue
            solves += m
            for a, rec in zip(alphas, recs):
                obj_dag = objective(op, data, sigma, a, pen, inst.udag)
                if rec.objective <= obj_dag + 1e-9 * (1.0 + abs(obj_dag)):
                    minimizer_ok += 1
            us = [rec.u_alpha for rec in recs]
            res = balance(us, q, C_bd, r)
            j_star = oracle_best(us, inst.udag, pen)
            err_bal = l2_norm(us[res.j_bal - 1] - inst.udag) ** q
            err_star = l2_norm(us[j_star - 1] - inst.udag) ** q
            vals.append(err_bal)
            efficiency.append(err_bal / err_star if err_star > 0 else 1.0)
            if ti == len(t_grid) - 1 and k == 0:
                bregs = [bregman(pen, u, inst.udag) for u in us]
                l2s = [l2_norm(u - inst.udag) for u in us]
                demo_rows = tuple(
                    {
                        "j": j + 1,
                        "alpha": alphas[j],
                        "bregman_error": bregs[j],
                        "l2_error": l2s[j],
                        "psi": float(res.psi[j]),
                        "selected": int(j + 1 == res.j_bal),
                    }
                    for j in range(m)
                )
        arr = np.array(vals)
        means.append(_trimmed(arr))
        raw_means.append(float(arr.mean()))
        stderrs.append(float(arr.std(ddof=1) / np.sqrt(len(arr))))
        excluded.append(dropped)
    excluded = np.array(excluded, dtype=int)
    _exclusion_gate(excluded, reps * len(t_grid))
    xs = np.log(t_grid) / np.sqrt(t_grid)
    slope, intercept, r2 = fit_loglog_slope(list(zip(xs, means)))
    kappa_exp = inst.predicted_phi.kappa if inst.predicted_phi.family == "holder" else np.nan
    report = RateReport(
        t=t_grid,
        mean_error=np.array(means),
        raw_mean_error=np.array(raw_means),
        stderr=np.array(stderrs),
        excluded=excluded,
        replicates=reps,
        slope=slope,
        intercept=intercept,
        r2=r2,
        predicted_exponent=float(kappa_exp),
        regressor="ln(t)/sqrt(t)",
        minimizer_fraction=minimizer_ok / max(solves, 1),
        bound_violations=0,
        alphas=np.array(alpha1s),
    )
    return LepskiiStudy(report, np.array(efficiency), demo_rows, q)


@dataclass(frozen=True)
class ClassicalReport:
    delta: np.ndarray
    error: np.ndarray  # L2 distance to the truth
    bound_ok: np.ndarray
    slope: float
    intercept: float
    r2: float
    predicted_slope: float


def run_classical_study(cfg: ExperimentConfig) -> ClassicalReport:
    """Deterministic noise-level path: g_obs = g + delta * unit perturbation.

    Solves the squared-L2 problem on a delta grid with alpha = delta /
    ||omega|| and checks the error bound with C_err = 2, err = 2 delta^2
    on every run.
    """
    dom = cfg.domain()
    op = cfg.operator(dom)
    inst = cfg.source(op)
    pen = cfg.penalty(dom)
    opts = cfg.solver_options()
    deltas = np.asarray(cfg.require("classical.delta_grid"), dtype=float)
    if np.any(deltas <= 0):
        raise ValueError("delta grid must be positive")
    phi = certified_vsc(
        inst,
        float(cfg.get("penalty.box_lo", 0.0)),
        float(cfg.get("penalty.box_hi", np.inf)),
    )
    rng = np.random.default_rng(cfg.seed())
    xi = rng.normal(size=dom.ncells)
    xi_fun = GridFunction(dom, xi)
    xi_fun = (1.0 / l2_norm(xi_fun)) * xi_fun
    errors, ok = [], []
    for delta in deltas:
        gobs = op.apply(inst.udag) + float(delta) * xi_fun
        alpha = float(delta) / inst.omega_norm
        rec = minimize_tikhonov(op, gobs, 0.0, alpha, pen, opts)
        if not rec.converged:
            raise RuntimeError(f"classical solve failed to converge at delta={delta}")
        err_l2 = l2_norm(rec.u_alpha - inst.udag)
        errors.append(err_l2)
        breg = bregman(pen, rec.u_alpha, inst.udag)
        budget = ErrorBudget(2.0, 2.0 * float(delta) ** 2, 1.0)
        ok.append(breg <= deterministic_bound(phi, budget, alpha) * (1.0 + 1e-9))
    slope, intercept, r2 = fit_loglog_slope(list(zip(deltas, errors)))
    nu = inst.order
    return ClassicalReport(
        delta=deltas,
        error=np.array(errors),
        bound_ok=np.array(ok, dtype=bool),
        slope=slope,
        intercept=intercept,
        r2=r2,
        predicted_slope=2.0 * nu / (2.0 * nu + 1.0),
    )


# serialization: every float with 17 significant digits


def _fmt17(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError("cannot serialize non-finite float")
    return format(float(x), ".17g")


def dumps17(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = ",\n".join(
            f'{pad}  {json.dumps(str(k))}: {dumps17(v, indent + 1)}'
            for k, v in obj.items()
        )
        return "{\n" + inner + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        inner = ",\n".join(f"{pad}  {dumps17(v, indent + 1)}" for v in seq)
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt17(float(obj))
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_rates_csv(path, report: RateReport) -> None:
    with open(path, "w") as fh:
        fh.write("t,mean_bregman,stderr,excluded\n")
        for t, m, se, ex in zip(
            report.t, report.mean_error, report.stderr, report.excluded
        ):
            fh.write(f"{_fmt17(t)},{_fmt17(m)},{_fmt17(se)},{int(ex)}\n")


def write_lepskii_csv(path, rows: Sequence[dict]) -> None:
    with open(path, "w") as fh:
        fh.write("j,alpha,bregman_error,l2_error,psi,selected\n")
        for row in rows:
            fh.write(
                f"{row['j']},{_fmt17(row['alpha'])},{_fmt17(row['bregman_error'])},"
                f"{_fmt17(row['l2_error'])},{_fmt17(row['psi'])},{row['selected']}\n"
            )


def write_tail_csv(path, table) -> None:
    with open(path, "w") as fh:
        fh.write("t,rho,coverage,replicates\n")
        for i, t in enumerate(table.t_values):
            for k, rho in enumerate(table.rho_values):
                fh.write(
                    f"{_fmt17(float(t))},{_fmt17(float(rho))},"
                    f"{_fmt17(float(table.coverage[i, k]))},{table.replicates}\n"
                )
