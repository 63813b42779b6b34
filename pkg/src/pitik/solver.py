"""Global minimization of the Tikhonov functional over the constraint box.

Monotone accelerated proximal gradient on the smooth fidelity part with
backtracking line search; the penalty and box enter through their
proximal map.  For linear forward operators the problem is convex, so
any limit point is a global minimizer; convergence is declared only when
both the relative objective decrease and a proximal fixed-point residual
are small.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from scipy.special import xlogy

from . import _kernels
from .domain import GridFunction
from .operators import FourierMultiplierOperator
from .penalties import Penalty, penalty_value, prox
from .process import BinnedCounts, PointData, bin_counts

Data = Union[PointData, BinnedCounts, GridFunction]


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 5000
    rel_tolerance: float = 1e-8
    backtrack: float = 0.5
    acceleration: bool = True
    track_objectives: bool = False

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("need at least one iteration")
        if self.rel_tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtracking factor must lie in (0, 1)")


@dataclass
class Reconstruction:
    u_alpha: GridFunction
    alpha: float
    objective: float
    iterations: int
    converged: bool
    kkt_residual: float
    trace: List[float] = field(default_factory=list)


class _SmoothPart:
    """Value and gradient of the fidelity composed with the operator."""

    def __init__(self, op: FourierMultiplierOperator, data: Data, sigma: float):
        self.op = op
        self.hd = op.domain.cell_volume
        if isinstance(data, GridFunction):
            if data.domain.ncells != op.domain.ncells:
                raise ValueError("observation grid does not match the operator")
            self.kind = "l2"
            self.gobs = data.values
            # Hessian of the squared norm is 2 I in the L2 geometry
            self.lipschitz = 2.0 * op.norm_bound() ** 2
            return
        if sigma <= 0:
            raise ValueError("point-process fidelity needs a positive offset")
        self.kind = "poisson"
        self.sigma = sigma
        binned = data if isinstance(data, BinnedCounts) else bin_counts(data, op.domain)
        self.counts = binned.counts
        self.t = binned.t
        self.dens = binned.counts / (binned.t * self.hd)
        dens_cap = float(np.max(self.dens)) if self.dens.size else 0.0
        self.lipschitz = op.norm_bound() ** 2 * (dens_cap + sigma) / sigma**2

    def value(self, u_vals: np.ndarray) -> float:
        g = self.op.apply_values(u_vals)
        if self.kind == "l2":
            r = g - self.gobs
            return self.hd * float(np.dot(r, r))
        if np.any(g < 0):
            # box plus nonnegative multiplier normally prevents this; the
            # line search treats it as a rejection
            return np.inf
        return _kernels.poisson_value(g, self.counts, self.t, self.hd, self.sigma)

    def value_and_grad(self, u_vals: np.ndarray):
        g = self.op.apply_values(u_vals)
        if self.kind == "l2":
            r = g - self.gobs
            return self.hd * float(np.dot(r, r)), 2.0 * self.op.adjoint_values(r)
        if np.any(g < 0):
            return np.inf, None
        val = _kernels.poisson_value(g, self.counts, self.t, self.hd, self.sigma)
        w = np.empty_like(g)
        _kernels.poisson_grad(g, self.dens, self.sigma, w)
        return val, self.op.adjoint_values(w)


def objective(
    op: FourierMultiplierOperator,
    data: Data,
    sigma: float,
    alpha: float,
    pen: Penalty,
    u: GridFunction,
) -> float:
    """S(F(u), data) + alpha * R(u), +inf outside the box."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    pv = penalty_value(pen, u)
    if not np.isfinite(pv):
        return np.inf
    return _SmoothPart(op, data, sigma).value(u.values) + alpha * pv


def _default_init(pen: Penalty, ncells: int) -> np.ndarray:
    if pen.kind == "quadratic":
        base = pen.center_values(ncells)
    else:
        base = np.ones(ncells)
    hi = pen.box_hi if np.isfinite(pen.box_hi) else np.inf
    return np.clip(base, pen.box_lo, hi)


def minimize_tikhonov(
    op: FourierMultiplierOperator,
    data: Data,
    sigma: float,
    alpha: float,
    pen: Penalty,
    opts: Optional[SolverOptions] = None,
    init: Optional[GridFunction] = None,
) -> Reconstruction:
    """Minimize the Tikhonov functional; monotone accelerated descent.

    `init` warm-starts the iteration (projected into the box); otherwise
    the box projection of the penalty center is used.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    opts = opts or SolverOptions()
    dom = op.domain
    hd = dom.cell_volume
    smooth = _SmoothPart(op, data, sigma)

    # raw-array penalty value and prox for the inner loop; iterates always
    # come out of the prox, hence lie in the box, so no membership test
    lo, hi = pen.box_lo, pen.box_hi
    if pen.kind == "quadratic":
        center = pen.center_values(dom.ncells)

        def pen_of(vals):
            d = vals - center
            return hd * float(np.dot(d, d))

        def prox_vals(v, sp):
            return np.clip((v + 2.0 * sp * center) / (1.0 + 2.0 * sp), lo, hi)

    else:

        def pen_of(vals):
            v = np.maximum(vals, 0.0)
            return hd * float(np.sum(xlogy(v, v)))

        def prox_vals(v, sp):
            out = np.empty_like(v)
            _kernels.entropy_prox(v, sp, lo, hi, out)
            return out

    if init is not None:
        u = np.clip(init.values.copy(), pen.box_lo, pen.box_hi)
    else:
        u = _default_init(pen, dom.ncells)
    step = 1.0 / max(smooth.lipschitz, 1e-30)
    # the global curvature bound can be very pessimistic (flat fidelity far
    # from the offset); let the step recover between iterations and rely on
    # the backtracking test to keep the majorization valid.  Growth pauses
    # after any rejected or non-representable (exact zero drop) update, so
    # near machine precision the tail becomes a fixed-step prox map and can
    # land on its exact fixed point instead of cycling.
    recover = 1.0 / np.sqrt(opts.backtrack)
    grow_ok = True

    # strong convexity inherited from the penalty term alone: Hessian of
    # ||u-u0||^2 is 2I; of int u ln u it is diag(1/u) >= 1/hi on the box
    if pen.kind == "quadratic":
        mu = 2.0 * alpha
    elif np.isfinite(pen.box_hi):
        mu = alpha / pen.box_hi
    else:
        mu = 0.0

    fu, grad_u = smooth.value_and_grad(u)
    obj_u = fu + alpha * pen_of(u)
    y = u.copy()
    fy, grad_y = fu, grad_u
    t_acc = 1.0
    u_prev = u.copy()
    trace = [obj_u] if opts.track_objectives else []
    converged = False
    kkt = np.inf
    iters = 0
    stalls = 0

    for iters in range(1, opts.max_iterations + 1):
        if grad_y is None:
            # smooth part undefined at the extrapolated point; restart
            y = u.copy()
            fy, grad_y = smooth.value_and_grad(u)
            t_acc = 1.0
        if grow_ok:
            step *= recover
        # backtracking on the majorization at y
        while True:
            z = prox_vals(y - step * grad_y, step * alpha)
            fz = smooth.value(z)
            dz = z - y
            quad = fy + float(np.dot(grad_y, dz)) * hd + hd * float(np.dot(dz, dz)) / (
                2.0 * step
            )
            if fz <= quad + 1e-12 * (1.0 + abs(quad)):
                break
            step *= opts.backtrack
            if step < 1e-18:
                break
        # gradient-mapping norm at y: free stationarity proxy
        prox_res = np.sqrt(hd) * float(np.linalg.norm(dz)) / step
        obj_z = fz + alpha * pen_of(z)

        # monotone update: keep the better of the proximal point and the
        # previous iterate; a rejection restarts the momentum
        if obj_z <= obj_u:
            grow_ok = obj_z < obj_u
            u_next, obj_next = z, obj_z
            if not opts.acceleration:
                y = u_next.copy()
            elif mu > 0.0:
                # linearly convergent momentum for known strong convexity
                q = min(np.sqrt(mu * step), 1.0)
                beta = (1.0 - q) / (1.0 + q)
                y = z + beta * (z - u)
            else:
                t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc**2))
                y = u_next + (t_acc / t_next) * (z - u_next) + (
                    (t_acc - 1.0) / t_next
                ) * (u_next - u_prev)
                t_acc = t_next
        else:
            # overshoot: the majorization slack can admit a point one ulp
            # above the incumbent, so also shrink to break repeat cycles
            grow_ok = False
            step *= opts.backtrack
            u_next, obj_next = u, obj_u
            y = u.copy()
            t_acc = 1.0

        drop = obj_u - obj_next
        u_prev, u, obj_u = u, u_next, obj_next
        if opts.track_objectives:
            trace.append(obj_u)

        tol_scale = 1.0 + abs(obj_u)
        if (
            drop <= opts.rel_tolerance * tol_scale
            and prox_res <= 10.0 * opts.rel_tolerance * tol_scale
        ):
            # confirm stationarity at the iterate itself
            fu, grad_u = smooth.value_and_grad(u)
            fixed = prox_vals(u - step * grad_u, step * alpha)
            kkt = np.sqrt(hd) * float(np.linalg.norm(u - fixed)) / step
            if kkt <= 10.0 * opts.rel_tolerance * tol_scale:
                converged = True
                break

        # once the objective stops being representable at double precision
        # further iterations cannot move the iterate; give up early
        stalls = stalls + 1 if drop == 0.0 else 0
        if stalls >= 50:
            break

        fy, grad_y = smooth.value_and_grad(y)

    if not converged:
        fu, grad_u = smooth.value_and_grad(u)
        if grad_u is not None:
            fixed = prox_vals(u - step * grad_u, step * alpha)
            kkt = np.sqrt(hd) * float(np.linalg.norm(u - fixed)) / step

    return Reconstruction(
        u_alpha=GridFunction(dom, u),
        alpha=alpha,
        objective=obj_u,
        iterations=iters,
        converged=converged,
        kkt_residual=kkt,
        trace=trace,
    )
