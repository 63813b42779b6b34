"""Data fidelities: shifted Poisson negative log-likelihood and friends.

With offset sigma > 0 the empirical fidelity is

    S(g) = int g dx - int ln(g+sigma) (dG_t + sigma dx),

its ideal counterpart is the shifted Kullback-Leibler divergence
T(g, gdag) = KL(g+sigma, gdag+sigma), and the gap between the two is
controlled by the noise functional Z(g) = |int ln(g+sigma) (dG_t - gdag dx)|.
The squared L2 distance serves as the deterministic stand-in.
"""

from __future__ import annotations

from typing import Sequence, Union

import numpy as np

from . import _kernels
from .domain import GridFunction, integrate, l2_norm
from .process import BinnedCounts, PointData, bin_counts, integrate_against


def _check_nonnegative(g: GridFunction, name: str) -> None:
    if np.any(g.values < 0):
        raise ValueError(f"{name} must be nonnegative")


def shifted_neg_loglik(
    g: GridFunction,
    data: Union[PointData, BinnedCounts],
    sigma: float,
) -> float:
    """Empirical fidelity S(g); +inf when an observed point hits g+sigma = 0.

    Point data is evaluated at the exact point locations.  For piecewise
    constant g this agrees with the binned-counts path to rounding, and
    the latter is what the solver iterates on.
    """
    _check_nonnegative(g, "g")
    if sigma < 0:
        raise ValueError("offset must be nonnegative")
    if isinstance(data, PointData):
        binned = bin_counts(data, g.domain)
    else:
        binned = data
    return _kernels.poisson_value(
        g.values, binned.counts, binned.t, g.domain.cell_volume, sigma
    )


def shifted_kl(g: GridFunction, gdag: GridFunction, sigma: float) -> float:
    """Ideal fidelity offset T(g, gdag) = KL(g+sigma, gdag+sigma) >= 0."""
    _check_nonnegative(g, "g")
    _check_nonnegative(gdag, "gdag")
    if sigma < 0:
        raise ValueError("offset must be nonnegative")
    return _kernels.kl_value(g.values, gdag.values, sigma, g.domain.cell_volume)


def noise_functional_Z(
    g: GridFunction, data: PointData, gdag: GridFunction, sigma: float
) -> float:
    """|int ln(g+sigma) (dG_t - gdag dx)|."""
    return abs(signed_noise_integral(g, data, gdag, sigma))


def signed_noise_integral(
    g: GridFunction, data: PointData, gdag: GridFunction, sigma: float
) -> float:
    """int ln(g+sigma) (dG_t - gdag dx) with its sign."""
    _check_nonnegative(g, "g")
    if sigma <= 0:
        raise ValueError("offset must be positive")
    logg = GridFunction(g.domain, np.log(g.values + sigma))
    mean_part = integrate(GridFunction(g.domain, logg.values * gdag.values))
    return integrate_against(logg, data) - mean_part


def required_err_bound(
    candidates: Sequence[GridFunction],
    data: PointData,
    gdag: GridFunction,
    sigma: float,
) -> float:
    """Smallest err certifying the fidelity surrogate on this sample.

    Returns max over candidate images g of
    int [ln(g+sigma) - ln(gdag+sigma)] (dG_t - gdag dx); with the true
    image among the candidates the value is at least 0, and it is always
    at most 2 max Z.
    """
    base = signed_noise_integral(gdag, data, gdag, sigma)
    best = -np.inf
    for g in candidates:
        best = max(best, signed_noise_integral(g, data, gdag, sigma) - base)
    return best


def squared_l2_fidelity(g: GridFunction, gobs: GridFunction) -> float:
    return l2_norm(g - gobs) ** 2


def l2_kl_coefficient(g: GridFunction, ghat: GridFunction, sigma: float) -> float:
    """Coefficient c with ||g - ghat||^2 <= c * T(g, ghat).

    c = (4/3)*sup(g+sigma) + (2/3)*sup(ghat+sigma); the heavier weight
    sits on the first argument of T.
    """
    return (4.0 / 3.0) * (float(np.max(g.values)) + sigma) + (2.0 / 3.0) * (
        float(np.max(ghat.values)) + sigma
    )


def mean_shifted_neg_loglik(g: GridFunction, gdag: GridFunction, sigma: float) -> float:
    """E[S(g, G_t)] = int g dx - int ln(g+sigma) (gdag + sigma) dx."""
    _check_nonnegative(g, "g")
    logg = np.log(g.values + sigma)
    return integrate(g) - integrate(
        GridFunction(g.domain, logg * (gdag.values + sigma))
    )
