"""Empirical concentration lab for the rescaled point process.

The supremum of |integral of g (dG_t - gdag dx)| over a truncated Sobolev
ball is replaced by its Cauchy-Schwarz majorant, which is exactly the
quantity the tail bounds control.  Frequencies are truncated at a cutoff
J; the discarded tail is reported through `truncation_remainder`.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .domain import (
    Domain,
    FourierCoeffs,
    GridFunction,
    fourier_coeffs,
    frequency_axis,
    integrate,
)
from .process import PointData, integrate_against, replicate_seed, sample_poisson

__all__ = [
    "SupremumProxy",
    "ExpectationStudy",
    "TailTable",
    "RBReport",
    "sup_proxy",
    "truncation_remainder",
    "expectation_study",
    "tail_table",
    "estimate_Cconc",
    "kappa",
    "rb_bound_check",
    "log_shift_radius",
]

# offset used to derive per-t seed streams; replicates split off by XOR
_T_STRIDE = 1000003


@dataclass(frozen=True)
class SupremumProxy:
    s: float
    R: float
    J: int
    value: float

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("proxy value cannot be negative")
        if self.R <= 0 or self.J < 0:
            raise ValueError("need R > 0 and J >= 0")


def _weights(domain: Domain, s: float, J: int) -> np.ndarray:
    axes = [frequency_axis(domain, J).astype(np.float64) for _ in range(domain.d)]
    grids = np.meshgrid(*axes, indexing="ij")
    return (1.0 + sum(g**2 for g in grids)) ** (-s)


def _empirical_coeffs_1d(points: np.ndarray, J: int, freqs: np.ndarray) -> np.ndarray:
    # running powers of exp(-2 pi i x): one exp per point, J multiplies
    base = np.exp(-2j * np.pi * points[:, 0])
    pos = np.empty(J + 1, dtype=np.complex128)
    pos[0] = len(base)
    cur = np.ones_like(base)
    for j in range(1, J + 1):
        cur *= base
        pos[j] = cur.sum()
    out = np.empty(len(freqs), dtype=np.complex128)
    for k, f in enumerate(freqs):
        out[k] = pos[f] if f >= 0 else np.conj(pos[-f])
    return out


def _empirical_coeffs_2d(
    points: np.ndarray, f0: np.ndarray, f1: np.ndarray
) -> np.ndarray:
    out = np.zeros((len(f0), len(f1)), dtype=np.complex128)
    for chunk in np.array_split(points, max(1, len(points) // 65536 + 1)):
        if not len(chunk):
            continue
        t0 = np.exp(-2j * np.pi * np.outer(f0, chunk[:, 0]))
        t1 = np.exp(-2j * np.pi * np.outer(f1, chunk[:, 1]))
        out += t0 @ t1.T
    return out


def empirical_residual(data: PointData, gdag: GridFunction, J: int) -> FourierCoeffs:
    """Coefficients of dG_t - gdag dx against the torus exponentials.

    The point part is evaluated exactly at the sampled locations, the
    density part through the grid transform.
    """
    dom = gdag.domain
    if data.points.shape[1] != dom.d:
        raise ValueError("point dimension does not match the grid")
    axes = tuple(frequency_axis(dom, J) for _ in range(dom.d))
    if dom.d == 1:
        emp = _empirical_coeffs_1d(data.points, J, axes[0])
    else:
        emp = _empirical_coeffs_2d(data.points, axes[0], axes[1])
    emp = emp / data.t
    return FourierCoeffs(dom, J, axes, emp - fourier_coeffs(gdag, J).coeffs)


def sup_proxy(data: PointData, gdag: GridFunction, s: float, R: float, J: int) -> float:
    """Cauchy-Schwarz majorant of the truncated-ball supremum.

    R * sqrt(sum over |j|_inf <= J of (1+|j|^2)^(-s) |r_j|^2) with r_j the
    residual coefficients of dG_t - gdag dx; dominates |int g (dG_t -
    gdag dx)| for every g with ||g||_{H^s} <= R supported on the box,
    realization by realization.
    """
    dom = gdag.domain
    if s <= dom.d / 2.0:
        raise ValueError("need s > d/2 for a summable weight sequence")
    if R <= 0:
        raise ValueError("ball radius must be positive")
    resid = empirical_residual(data, gdag, J)
    w = _weights(dom, s, J)
    return R * float(np.sqrt(np.sum(w * resid.power())))


def truncation_remainder(s: float, R: float, J: int, d: int) -> float:
    """Sup-norm bound R sqrt(2^d sum_{|j|_inf > J} (1+|j|^2)^(-s)) on the
    discarded part of any ball member; O(J^(d/2 - s)) as J grows.

    Lattice shells are summed exactly up to a cap and the rest is bounded
    by the integral majorant, so the result is always an upper bound.
    """
    if d not in (1, 2):
        raise ValueError("dimension must be 1 or 2")
    if s <= d / 2.0:
        raise ValueError("need s > d/2")
    cap = max(100 * (J + 1), 10000)
    k = np.arange(J + 1, cap + 1, dtype=np.float64)
    count = (2 * k + 1) ** d - (2 * k - 1) ** d
    total = float(np.sum(count * (1.0 + k * k) ** (-s)))
    # shells beyond the cap: count(k) <= 2d (2k)^(d-1) and (1+k^2)^-s <= k^-2s
    total += 2.0 * d * 2.0 ** (d - 1) * cap ** (d - 2 * s) / (2 * s - d)
    return R * math.sqrt(2.0**d * total)


@dataclass(frozen=True)
class ExpectationStudy:
    t: np.ndarray
    mean_proxy: np.ndarray
    std_proxy: np.ndarray
    bound: np.ndarray
    c1: float
    s: float
    R: float
    J: int
    replicates: int


def expectation_study(
    gdag: GridFunction,
    s: float,
    R: float,
    t_grid: Sequence[float],
    replicates: int,
    seed: int,
    J: Optional[int] = None,
) -> ExpectationStudy:
    """Monte Carlo means of the proxy against sqrt(c1) R sqrt(||gdag||_1 / t).

    c1 is the truncated weight sum; with c2 = 1 on the torus the bound is
    the explicit expectation estimate for the proxy.
    """
    if replicates < 100:
        raise ValueError("need at least 100 replicates")
    dom = gdag.domain
    if J is None:
        J = dom.n // 2
    c1 = float(np.sum(_weights(dom, s, J)))
    mass = integrate(gdag)
    t_arr = np.asarray(list(t_grid), dtype=np.float64)
    means = np.empty(len(t_arr))
    stds = np.empty(len(t_arr))
    for ti, t in enumerate(t_arr):
        base = seed + _T_STRIDE * ti
        vals = np.empty(replicates)
        for k in range(replicates):
            rng = np.random.default_rng(replicate_seed(base, k))
            data = sample_poisson(gdag, float(t), rng)
            vals[k] = sup_proxy(data, gdag, s, R, J)
        means[ti] = vals.mean()
        stds[ti] = vals.std(ddof=1)
    bound = np.sqrt(c1) * R * np.sqrt(mass) / np.sqrt(t_arr)
    return ExpectationStudy(t_arr, means, stds, bound, c1, s, R, J, replicates)


@dataclass(frozen=True)
class TailTable:
    t_values: np.ndarray
    rho_values: np.ndarray
    coverage: np.ndarray  # shape (len(t), len(rho))
    replicates: int

    def __post_init__(self):
        cov = np.asarray(self.coverage)
        if cov.shape != (len(self.t_values), len(self.rho_values)):
            raise ValueError("coverage shape does not match the grids")
        if np.any(cov < 0) or np.any(cov > 1):
            raise ValueError("coverage must lie in [0, 1]")
        # built from common samples per t, so monotone in rho exactly
        if np.any(np.diff(cov, axis=1) < 0):
            raise ValueError("coverage must be non-decreasing in rho")
        if self.replicates < 1:
            raise ValueError("need a positive replicate count")


def tail_table(
    gdag: GridFunction,
    s: float,
    R: float,
    t_values: Sequence[float],
    rho_values: Sequence[float],
    replicates: int,
    seed: int,
    J: Optional[int] = None,
) -> TailTable:
    """Empirical coverage P(proxy <= rho / sqrt(t)) on a (t, rho) grid."""
    dom = gdag.domain
    if J is None:
        J = dom.n // 2
    t_arr = np.asarray(list(t_values), dtype=np.float64)
    rho_arr = np.asarray(list(rho_values), dtype=np.float64)
    if np.any(np.diff(rho_arr) <= 0):
        raise ValueError("rho grid must be strictly increasing")
    cov = np.empty((len(t_arr), len(rho_arr)))
    for ti, t in enumerate(t_arr):
        base = seed + _T_STRIDE * ti
        vals = np.empty(replicates)
        for k in range(replicates):
            rng = np.random.default_rng(replicate_seed(base, k))
            data = sample_poisson(gdag, float(t), rng)
            vals[k] = sup_proxy(data, gdag, s, R, J)
        cov[ti] = np.mean(vals[None, :] * np.sqrt(t) <= rho_arr[:, None], axis=1)
    return TailTable(t_arr, rho_arr, cov, replicates)


def _wilson_lower(phat: np.ndarray, n: int, z: float = 1.959963984540054) -> np.ndarray:
    denom = 1.0 + z * z / n
    center = phat + z * z / (2.0 * n)
    rad = z * np.sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n))
    return (center - rad) / denom


def estimate_Cconc(tail: TailTable, R: float) -> float:
    """Smallest C >= 1 with coverage >= 1 - exp(-rho/(R C)) wherever rho >= R C.

    Empirical coverage enters through its 95% Wilson lower confidence
    bound so that finite replicates cannot certify an optimistic constant.
    """
    if len(tail.t_values) < 3:
        raise ValueError("need at least 3 exposure values")
    if np.sum(tail.rho_values >= R) < 5:
        raise ValueError("need at least 5 rho values with rho >= R")
    wl = _wilson_lower(np.asarray(tail.coverage), tail.replicates)
    rho = tail.rho_values

    def feasible(C: float) -> bool:
        active = rho >= R * C
        if not np.any(active):
            return True
        need = 1.0 - np.exp(-rho[active] / (R * C))
        return bool(np.all(wl[:, active] >= need[None, :]))

    if feasible(1.0):
        return 1.0
    lo, hi = 1.0, 1e6
    if not feasible(hi):
        slack = wl - (1.0 - np.exp(-rho[None, :] / (R * hi)))
        i, k = np.unravel_index(int(np.argmin(slack)), slack.shape)
        raise ValueError(
            "no feasible constant up to 1e6; worst cell "
            f"t={tail.t_values[i]:g}, rho={rho[k]:g}"
        )
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def kappa(epsilon: float) -> float:
    """Tail constant 5/4 + 32/epsilon of the finite-family inequality."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return 1.25 + 32.0 / epsilon


@dataclass(frozen=True)
class RBReport:
    epsilon: float
    kappa: float
    b: float
    v0: float
    mean_z: float
    z_values: np.ndarray
    rho: np.ndarray
    exceedance: np.ndarray
    bound: np.ndarray

    def all_ok(self) -> bool:
        return bool(np.all(self.exceedance <= self.bound))


def rb_bound_check(
    family: Sequence[GridFunction],
    gdag: GridFunction,
    t: float,
    replicates: int,
    epsilon: float,
    seed: int,
    rho_grid: Sequence[float] = (1.0, 2.0, 4.0),
) -> RBReport:
    """Empirical tail of Z = max |int f (dN - dnu)| for the unscaled process.

    N has mean measure t gdag dx and nu = t gdag dx.  Exceedances of
    (1+eps) E[Z] + sqrt(12 v0 rho) + kappa(eps) b rho are counted strictly,
    so degenerate families with Z identically zero pass trivially.
    """
    fam = list(family)
    if not fam:
        raise ValueError("need a nonempty family")
    dom = gdag.domain
    b = max(float(np.max(np.abs(f.values))) for f in fam)
    v0 = max(
        t * integrate(GridFunction(dom, f.values**2 * gdag.values)) for f in fam
    )
    nu = [t * integrate(GridFunction(dom, f.values * gdag.values)) for f in fam]
    zs = np.empty(replicates)
    for k in range(replicates):
        rng = np.random.default_rng(replicate_seed(seed, k))
        data = sample_poisson(gdag, t, rng)
        zs[k] = max(
            abs(t * integrate_against(f, data) - m) for f, m in zip(fam, nu)
        )
    mean_z = float(zs.mean())
    rho = np.asarray(list(rho_grid), dtype=np.float64)
    kap = kappa(epsilon)
    thresh = (1.0 + epsilon) * mean_z + np.sqrt(12.0 * v0 * rho) + kap * b * rho
    exceed = np.array([float(np.mean(zs > th)) for th in thresh])
    return RBReport(epsilon, kap, b, v0, mean_z, zs, rho, exceed, np.exp(-rho))


def log_shift_radius(
    R: float, sigma: float, s: float, calibration: float = 1.0
) -> float:
    """Radius transfer R max(sigma^-(floor(s)+1), |ln R|) for the shifted log."""
    if R < 1:
        raise ValueError("need R >= 1")
    if sigma <= 0:
        raise ValueError("offset must be positive")
    if calibration <= 0:
        raise ValueError("calibration constant must be positive")
    power = -(math.floor(s) + 1)
    return calibration * R * max(sigma**power, abs(math.log(R)))
