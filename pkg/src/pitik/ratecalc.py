"""Index-function calculus: Fenchel conjugates, a-priori rule, error bound.

An index function phi is increasing with phi(0) = 0 and phi^2 concave on
its domain.  The smoothness it encodes enters the convergence analysis
through the conjugate (-phi)*(s) = sup_{tau>=0} (s tau + phi(tau)) and
its subgradients; the a-priori regularization parameter solves
1/alpha = C_err * phi'(C_err * err).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

LOG_TAU_MAX = np.exp(-1.0)

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class IndexFunction:
    """Smoothness index function.

    Families: holder with phi(tau) = C tau^kappa, kappa in (0, 1];
    logarithmic with phi(tau) = C (-ln tau)^(-2p) on (0, 1/e]; tabulated
    with monotone samples interpolated linearly.
    """

    family: str
    C: float = 1.0
    kappa: float = 0.5
    p: float = 1.0
    taus: Optional[np.ndarray] = field(default=None, repr=False)
    vals: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if self.family not in ("holder", "logarithmic", "tabulated"):
            raise ValueError(f"unknown index function family {self.family!r}")
        if self.family != "tabulated" and self.C <= 0:
            raise ValueError("scale must be positive")
        if self.family == "holder" and not 0 < self.kappa <= 1:
            raise ValueError("holder exponent must lie in (0, 1]")
        if self.family == "logarithmic" and self.p <= 0:
            raise ValueError("logarithmic exponent must be positive")

    @property
    def tau_max(self) -> float:
        """Right end of the domain; +inf for unbounded families."""
        if self.family == "logarithmic":
            return LOG_TAU_MAX
        if self.family == "tabulated":
            return float(self.taus[-1])
        return np.inf


def holder(C: float, kappa: float) -> IndexFunction:
    return IndexFunction("holder", C=C, kappa=kappa)


def logarithmic(C: float, p: float) -> IndexFunction:
    return IndexFunction("logarithmic", C=C, p=p)


def tabulated(taus, vals) -> IndexFunction:
    """Piecewise linear index function through monotone samples.

    Requires taus[0] = 0 with value 0, increasing knots, nondecreasing
    values, and numerically concave squared values.
    """
    taus = np.asarray(taus, dtype=np.float64)
    vals = np.asarray(vals, dtype=np.float64)
    if taus.ndim != 1 or taus.shape != vals.shape or taus.size < 2:
        raise ValueError("need matching 1-d sample arrays with >= 2 knots")
    if taus[0] != 0.0 or vals[0] != 0.0:
        raise ValueError("index functions start at (0, 0)")
    if np.any(np.diff(taus) <= 0):
        raise ValueError("knots must be strictly increasing")
    if np.any(np.diff(vals) < 0):
        raise ValueError("values must be nondecreasing")
    sq_slopes = np.diff(vals**2) / np.diff(taus)
    if np.any(np.diff(sq_slopes) > 1e-9 * max(1.0, sq_slopes[0])):
        raise ValueError("squared values must be concave on the grid")
    return IndexFunction("tabulated", taus=taus, vals=vals)


def phi_from_spectral(kind: str, order: float, scale: float = 1.0) -> IndexFunction:
    """Index function induced by a spectral source condition.

    A power-type source psi(tau) = tau^nu with nu in (0, 1/2] yields
    phi(tau) = scale * tau^(2 nu/(2 nu + 1)); the log-type source
    psi(tau) = (-ln tau)^(-p) yields phi(tau) = scale * (-ln tau)^(-2p).
    The multiplicative scale is not pinned down by the conversion and
    defaults to 1.
    """
    if kind == "holder":
        if not 0 < order <= 0.5:
            raise ValueError("spectral smoothness must lie in (0, 1/2]")
        return holder(scale, 2 * order / (2 * order + 1))
    if kind == "logarithmic":
        return logarithmic(scale, order)
    raise ValueError(f"unknown spectral family {kind!r}")


# ---------------------------------------------------------------------------
# evaluation and derivatives


def eval_phi(phi: IndexFunction, tau: float) -> float:
    if tau < 0:
        raise ValueError("argument must be nonnegative")
    if tau == 0.0:
        return 0.0
    if phi.family == "holder":
        return phi.C * tau**phi.kappa
    if tau > phi.tau_max * (1 + 1e-12):
        raise ValueError(f"argument {tau} beyond domain end {phi.tau_max}")
    if phi.family == "logarithmic":
        return phi.C * (-np.log(min(tau, phi.tau_max))) ** (-2 * phi.p)
    return float(np.interp(tau, phi.taus, phi.vals))


def eval_phi_clamped(phi: IndexFunction, tau: float) -> Tuple[float, bool]:
    """eval_phi with out-of-domain arguments clamped; flags the clamp."""
    if tau > phi.tau_max:
        return eval_phi(phi, phi.tau_max), True
    return eval_phi(phi, tau), False


def subgradient_neg(phi: IndexFunction, tau: float) -> Tuple[float, float]:
    """Subdifferential of -phi at tau > 0 as an interval (lo, hi).

    Singleton {-phi'} for the differentiable families; for tabulated the
    difference-quotient interval at knots.
    """
    if tau <= 0:
        raise ValueError("subdifferential only for positive arguments")
    if phi.family == "holder":
        g = -phi.C * phi.kappa * tau ** (phi.kappa - 1.0)
        return (g, g)
    if tau > phi.tau_max * (1 + 1e-12):
        raise ValueError(f"argument {tau} beyond domain end {phi.tau_max}")
    if phi.family == "logarithmic":
        y = -np.log(min(tau, phi.tau_max))
        g = -phi.C * 2 * phi.p * y ** (-2 * phi.p - 1.0) / tau
        return (g, g)
    slopes = np.diff(phi.vals) / np.diff(phi.taus)
    k = int(np.searchsorted(phi.taus, tau))
    if k < phi.taus.size and phi.taus[k] == tau:
        left = slopes[k - 1] if k >= 1 else np.inf
        right = slopes[k] if k < slopes.size else slopes[-1]
        return (-left, -right)
    return (-slopes[k - 1], -slopes[k - 1])


# ---------------------------------------------------------------------------
# Fenchel conjugate of -phi


def _theta(phi: IndexFunction, s: float, tau: np.ndarray) -> np.ndarray:
    if phi.family == "holder":
        vals = phi.C * tau**phi.kappa
    elif phi.family == "logarithmic":
        vals = phi.C * (-np.log(tau)) ** (-2 * phi.p)
    else:
        vals = np.interp(tau, phi.taus, phi.vals)
    return s * tau + vals


def _golden_max(phi: IndexFunction, s: float, lo: float, hi: float) -> float:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = _theta(phi, s, np.array([c]))[0]
    fd = _theta(phi, s, np.array([d]))[0]
    while (b - a) > 1e-10 * max(1.0, abs(a) + abs(b)):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = _theta(phi, s, np.array([c]))[0]
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = _theta(phi, s, np.array([d]))[0]
    return max(fc, fd)


def conjugate_neg_numeric(phi: IndexFunction, s: float) -> float:
    """(-phi)*(s) by log-grid bracketing plus golden-section refinement.

    The objective s*tau + phi(tau) need not be unimodal over the whole
    domain (the logarithmic family has convex stretches), so a dense scan
    locates the global bracket first.
    """
    if s >= 0:
        raise ValueError("conjugate evaluated for negative arguments only")
    if phi.family == "tabulated":
        # piecewise linear: the sup sits at a knot
        return max(0.0, float(np.max(s * phi.taus + phi.vals)))
    hi = phi.tau_max
    if not np.isfinite(hi):
        # expand until the objective has clearly turned downward
        hi = max(1.0, 1.0 / abs(s))
        while _theta(phi, s, np.array([2 * hi]))[0] > _theta(phi, s, np.array([hi]))[0]:
            hi *= 2.0
            if hi > 1e300:
                return np.inf
        hi *= 2.0
    grid = np.concatenate([[0.0], np.geomspace(hi * 1e-18, hi, 4000)])
    vals = _theta(phi, s, grid[1:])
    k = 1 + int(np.argmax(vals))
    lo_b = grid[k - 1]
    hi_b = grid[min(k + 1, grid.size - 1)]
    best = _golden_max(phi, s, lo_b, hi_b)
    return max(0.0, best, float(np.max(vals)))


def conjugate_neg(phi: IndexFunction, s: float) -> float:
    """(-phi)*(s) for s < 0; closed form for holder, numeric otherwise."""
    if s >= 0:
        raise ValueError("conjugate evaluated for negative arguments only")
    if phi.family == "holder":
        if phi.kappa == 1.0:
            return 0.0 if s <= -phi.C else np.inf
        tau_star = (phi.C * phi.kappa / abs(s)) ** (1.0 / (1.0 - phi.kappa))
        return s * tau_star + phi.C * tau_star**phi.kappa
    return conjugate_neg_numeric(phi, s)


def conjugate_maximizer(phi: IndexFunction, s: float) -> float:
    """A tau attaining the sup in (-phi)*(s) (holder closed form only)."""
    if phi.family != "holder" or phi.kappa == 1.0:
        raise ValueError("closed-form maximizer only for strict holder")
    return (phi.C * phi.kappa / abs(s)) ** (1.0 / (1.0 - phi.kappa))


# ---------------------------------------------------------------------------
# deterministic theory


@dataclass(frozen=True)
class ErrorBudget:
    """Constants of the fidelity surrogate: C_err >= 1, err >= 0, beta > 0."""

    C_err: float = 1.0
    err: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if self.C_err < 1:
            raise ValueError("C_err must be at least 1")
        if self.err < 0:
            raise ValueError("err must be nonnegative")
        if self.beta <= 0:
            raise ValueError("beta must be positive")


def apriori_alpha(phi: IndexFunction, t: float, C_err: float = 1.0) -> float:
    """A-priori parameter alpha = 1/(C_err * phi'(C_err/sqrt(t))).

    Uses the knowledge-based error level err = 1/sqrt(t); for tabulated
    families the midpoint of the difference-quotient interval stands in
    for the derivative.
    """
    if t < 1:
        raise ValueError("exposure must be at least 1")
    if C_err < 1:
        raise ValueError("C_err must be at least 1")
    tau = C_err / np.sqrt(t)
    lo, hi = subgradient_neg(phi, tau)
    slope = -0.5 * (lo + hi)
    if not np.isfinite(slope) or slope <= 0:
        raise ValueError("index function has no usable slope at the error level")
    return 1.0 / (C_err * slope)


def deterministic_bound(phi: IndexFunction, budget: ErrorBudget, alpha: float) -> float:
    """Bregman-error bound (err/alpha + (-phi)*(-1/(C_err alpha)))/beta."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return (
        budget.err / alpha + conjugate_neg(phi, -1.0 / (budget.C_err * alpha))
    ) / budget.beta
