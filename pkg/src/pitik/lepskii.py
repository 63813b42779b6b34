"""Balancing principle on a geometric alpha grid.

Reconstructions are computed for alpha_j = (tau ln t / sqrt t) r^(2j-2)
up to the first alpha_j >= 1, and an index is selected from pairwise
distances alone, without knowledge of the smoothness of the truth.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .domain import GridFunction, l2_norm
from .penalties import Penalty, bregman
from .ratecalc import IndexFunction, conjugate_neg

__all__ = [
    "LepskiiConfig",
    "BalanceResult",
    "alpha_sequence",
    "psi_values",
    "balance",
    "error_functions",
    "oracle_best",
]


@dataclass(frozen=True)
class LepskiiConfig:
    """Grid parameters plus the metric constants of the penalty."""

    t: float
    tau_threshold: float
    r: float
    q: float = 2.0
    C_bd: float = 1.0

    def __post_init__(self):
        if self.t < np.e:
            raise ValueError("need t >= e so that ln t >= 1")
        if self.tau_threshold <= 0:
            raise ValueError("tau_threshold must be positive")
        if self.r <= 1:
            raise ValueError("grid ratio r must exceed 1")
        if self.q < 1:
            raise ValueError("metric exponent q must be >= 1")
        if self.C_bd <= 0:
            raise ValueError("C_bd must be positive")

    def grid(self) -> Tuple[List[float], int]:
        return alpha_sequence(self.t, self.tau_threshold, self.r)


def alpha_sequence(t: float, tau_threshold: float, r: float) -> Tuple[List[float], int]:
    """Geometric grid alpha_j = (tau ln t / sqrt t) r^(2j-2), j = 1..m.

    The grid stops at m = min{j : alpha_j >= 1}; returns (alphas, m) with
    len(alphas) == m.
    """
    if t < np.e:
        raise ValueError("need t >= e so that ln t >= 1")
    if tau_threshold <= 0:
        raise ValueError("tau_threshold must be positive")
    if r <= 1:
        raise ValueError("grid ratio r must exceed 1")
    alphas = [tau_threshold * np.log(t) / np.sqrt(t)]
    while alphas[-1] < 1.0:
        alphas.append(alphas[-1] * r * r)
        if len(alphas) > 100000:
            raise ValueError("alpha grid does not reach 1; tau_threshold too small")
    return alphas, len(alphas)


def psi_values(q: float, C_bd: float, r: float, m: int) -> np.ndarray:
    """Propagated-noise bounds psi(j) = 2 (4 C_bd)^(1/q) r^((2-2j)/q), j = 1..m."""
    if m < 1:
        raise ValueError("need m >= 1")
    j = np.arange(1, m + 1)
    return 2.0 * (4.0 * C_bd) ** (1.0 / q) * r ** ((2.0 - 2.0 * j) / q)


@dataclass(frozen=True)
class BalanceResult:
    j_bal: int  # 1-based, in {1, ..., m}
    reconstructions: tuple
    distances: np.ndarray  # (m, m) symmetric L2 distance matrix
    psi: np.ndarray  # (m,)


def balance(
    reconstructions: Sequence[GridFunction], q: float, C_bd: float, r: float
) -> BalanceResult:
    """Select an index from pairwise distances of the reconstructions.

    Index j is admissible when ||u_i - u_j|| <= 2 psi(i) for every i < j.
    The selector takes the largest admissible j: a literal reading of the
    stopping rule as a minimum would always return 1 because the condition
    is vacuous there, and the oracle bound needs the maximal index.
    """
    us = list(reconstructions)
    if not us:
        raise ValueError("need at least one reconstruction")
    m = len(us)
    dist = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            dist[i, j] = dist[j, i] = l2_norm(us[i] - us[j])
    psi = psi_values(q, C_bd, r, m)
    j_bal = 1
    for j in range(2, m + 1):
        if all(dist[i - 1, j - 1] <= 2.0 * psi[i - 1] for i in range(1, j)):
            j_bal = j
    return BalanceResult(j_bal, tuple(us), dist, psi)


def error_functions(
    phi: IndexFunction, q: float, C_bd: float, err: float, alpha: float
) -> Tuple[float, float]:
    """Approximation and propagated-noise error at a given alpha.

    f_app = 2 (2 C_bd (-phi)*(-1/alpha))^(1/q) and
    f_noi = 2 (2 C_bd err / alpha)^(1/q); the reconstruction error is
    bounded by (f_app + f_noi) / 2 whenever the source condition holds
    with constant beta >= 1/2.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if err < 0:
        raise ValueError("err must be nonnegative")
    if q < 1 or C_bd <= 0:
        raise ValueError("need q >= 1 and C_bd > 0")
    f_app = 2.0 * (2.0 * C_bd * conjugate_neg(phi, -1.0 / alpha)) ** (1.0 / q)
    f_noi = 2.0 * (2.0 * C_bd * err / alpha) ** (1.0 / q)
    return f_app, f_noi


def oracle_best(
    reconstructions: Sequence[GridFunction],
    udag: GridFunction,
    pen: Penalty,
    ustar: Optional[GridFunction] = None,
) -> int:
    """1-based index of the smallest Bregman error; ties go to the smaller j."""
    us = list(reconstructions)
    if not us:
        raise ValueError("need at least one reconstruction")
    vals = np.array([bregman(pen, u, udag, ustar) for u in us])
    return int(np.argmin(vals)) + 1
