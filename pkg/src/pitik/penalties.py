"""Convex penalties with Bregman distances, proximal maps, box constraints.

The quadratic penalty is R(u) = ||u - u0||^2 without a 1/2 factor, which
makes its Bregman distance exactly the squared norm and the Lepskii
metric constants (q, C_bd) = (2, 1).  The negative-entropy penalty
R(u) = int u ln u dx has the Kullback-Leibler divergence as its Bregman
distance.  Both live on a per-cell box [lo, hi].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import xlogy

from . import _kernels
from .domain import GridFunction, l2_inner, l2_norm

_BOX_TOL = 1e-12


@dataclass(frozen=True)
class Penalty:
    """Penalty configuration: kind, quadratic center, constraint box."""

    kind: str
    u0: Optional[GridFunction] = None
    box_lo: float = 0.0
    box_hi: float = np.inf

    def __post_init__(self):
        if self.kind not in ("quadratic", "entropy"):
            raise ValueError(f"unknown penalty kind {self.kind!r}")
        if self.box_lo < 0 or self.box_hi <= self.box_lo:
            raise ValueError("box must satisfy 0 <= lo < hi")
        if self.kind == "entropy" and self.u0 is not None:
            raise ValueError("entropy penalty takes no center")

    def center_values(self, ncells: int) -> np.ndarray:
        if self.u0 is None:
            return np.zeros(ncells)
        return self.u0.values


def quadratic(u0: Optional[GridFunction] = None, box_lo: float = 0.0,
              box_hi: float = np.inf) -> Penalty:
    return Penalty("quadratic", u0=u0, box_lo=box_lo, box_hi=box_hi)


def entropy(box_lo: float = 0.0, box_hi: float = np.inf) -> Penalty:
    return Penalty("entropy", box_lo=box_lo, box_hi=box_hi)


def in_box(pen: Penalty, u: GridFunction) -> bool:
    return bool(
        np.all(u.values >= pen.box_lo - _BOX_TOL)
        and np.all(u.values <= pen.box_hi + _BOX_TOL)
    )


def penalty_value(pen: Penalty, u: GridFunction) -> float:
    """R(u); +inf outside the box."""
    if not in_box(pen, u):
        return np.inf
    if pen.kind == "quadratic":
        center = pen.center_values(u.domain.ncells)
        diff = u.values - center
        return u.domain.cell_volume * float(np.dot(diff, diff))
    vals = np.maximum(u.values, 0.0)
    return u.domain.cell_volume * float(np.sum(xlogy(vals, vals)))


def penalty_subgradient(pen: Penalty, udag: GridFunction) -> GridFunction:
    """The canonical subgradient element used for Bregman distances.

    Quadratic: 2(udag - u0).  Entropy: ln(udag) + 1, which requires udag
    strictly positive.
    """
    if pen.kind == "quadratic":
        center = pen.center_values(udag.domain.ncells)
        return GridFunction(udag.domain, 2.0 * (udag.values - center))
    if np.any(udag.values <= 0):
        raise ValueError("entropy subgradient needs a strictly positive point")
    return GridFunction(udag.domain, np.log(udag.values) + 1.0)


def bregman(
    pen: Penalty,
    u: GridFunction,
    udag: GridFunction,
    ustar: Optional[GridFunction] = None,
) -> float:
    """R(u) - R(udag) - <ustar, u-udag>; +inf outside the box."""
    if ustar is None:
        ustar = penalty_subgradient(pen, udag)
    rdag = penalty_value(pen, udag)
    if not np.isfinite(rdag):
        raise ValueError("base point lies outside the penalty domain")
    ru = penalty_value(pen, u)
    if not np.isfinite(ru):
        return np.inf
    return ru - rdag - l2_inner(ustar, u - udag)


def prox(pen: Penalty, v: GridFunction, step: float) -> GridFunction:
    """argmin_u 1/2||u-v||^2 + step*R(u) over the box, cell by cell."""
    if step < 0:
        raise ValueError("step must be nonnegative")
    lo, hi = pen.box_lo, pen.box_hi
    if step == 0.0:
        return GridFunction(v.domain, np.clip(v.values, lo, hi))
    if pen.kind == "quadratic":
        center = pen.center_values(v.domain.ncells)
        out = (v.values + 2.0 * step * center) / (1.0 + 2.0 * step)
        return GridFunction(v.domain, np.clip(out, lo, hi))
    out = np.empty_like(v.values)
    _kernels.entropy_prox(v.values, step, lo, hi, out)
    return GridFunction(v.domain, out)


def metric_constants(pen: Penalty) -> Tuple[float, float]:
    """(q, C_bd) with ||u - udag||^q <= C_bd * bregman(u) on the box.

    Quadratic: (2, 1) with equality.  Entropy: (2, 2*hi) from the
    sup-norm comparison of the squared distance with the KL divergence,
    so the box top must be finite.
    """
    if pen.kind == "quadratic":
        return (2.0, 1.0)
    if not np.isfinite(pen.box_hi):
        raise ValueError("entropy metric constants need a finite box top")
    return (2.0, 2.0 * pen.box_hi)
