"""Linear smoothing operators on the torus and exact source instances.

Both operator kinds act as Fourier multipliers: the spectral-diagonal
operator has singular values s_j = (1+|j|^2)^(-a/2), and periodic
convolution multiplies by the kernel's Fourier coefficients.  A constant
background b >= 0 is added to the output so that intensities stay away
from zero.  Since the multiplier is explicit, truth pairs (u, F(u)) that
satisfy a spectral source condition exactly can be built by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .domain import (
    Domain,
    FourierCoeffs,
    GridFunction,
    constant,
    frequency_axis,
    reconstruct,
)
from .ratecalc import IndexFunction, holder, phi_from_spectral


def _fft_int_freqs(n: int) -> np.ndarray:
    return np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)


class FourierMultiplierOperator:
    """Linear map u -> multiplier action + background, via the FFT.

    `mult_fft` holds the coefficient-space multiplier m_j laid out on the
    FFT frequency grid, so applying the operator multiplies FFT bins
    elementwise.  Real outputs require m_{-j} = conj(m_j), which both
    constructors guarantee.
    """

    def __init__(self, domain: Domain, kind: str, mult_fft: np.ndarray, background: float):
        if background < 0:
            raise ValueError("background must be nonnegative")
        self.domain = domain
        self.kind = kind
        self.background = float(background)
        self.mult_fft = np.ascontiguousarray(mult_fft, dtype=np.complex128)
        if self.mult_fft.shape != domain.shape:
            raise ValueError("multiplier shape does not match the grid")
        # Hermitian symmetry lets the hot paths run real-input transforms
        # on the half spectrum (last axis), at half the cost
        half = self.mult_fft[..., : domain.n // 2 + 1]
        self._mult_rfft = np.ascontiguousarray(half)
        self._mult_rfft_conj = np.conj(self._mult_rfft)
        self._axes = tuple(range(domain.d))

    # hot paths work on raw value arrays; GridFunction wrappers below

    def apply_values(self, vals: np.ndarray) -> np.ndarray:
        dom = self.domain
        spec = np.fft.rfftn(vals.reshape(dom.shape))
        out = np.fft.irfftn(self._mult_rfft * spec, s=dom.shape, axes=self._axes)
        return out.reshape(-1) + self.background

    def adjoint_values(self, vals: np.ndarray) -> np.ndarray:
        dom = self.domain
        spec = np.fft.rfftn(vals.reshape(dom.shape))
        out = np.fft.irfftn(self._mult_rfft_conj * spec, s=dom.shape, axes=self._axes)
        return out.reshape(-1)

    def apply(self, u: GridFunction) -> GridFunction:
        return GridFunction(self.domain, self.apply_values(u.values))

    def apply_adjoint(self, g: GridFunction) -> GridFunction:
        return GridFunction(self.domain, self.adjoint_values(g.values))

    def multiplier(self, J: int) -> np.ndarray:
        """Coefficient-space multiplier on the |j|_inf <= J frequency set."""
        axes = tuple(frequency_axis(self.domain, J) for _ in range(self.domain.d))
        idx = tuple(ax % self.domain.n for ax in axes)
        if self.domain.d == 1:
            return self.mult_fft[idx[0]].copy()
        return self.mult_fft[np.ix_(idx[0], idx[1])].copy()

    def norm_bound(self) -> float:
        """Operator norm on L2 (sup of |m_j|)."""
        return float(np.max(np.abs(self.mult_fft)))

    def sum_sq_multiplier(self) -> float:
        return float(np.sum(np.abs(self.mult_fft) ** 2))


def spectral_diagonal(
    domain: Domain, decay_a: float, background: float = 0.0
) -> FourierMultiplierOperator:
    """Self-adjoint operator with singular values (1+|j|^2)^(-a/2), a > d/2."""
    if decay_a <= domain.d / 2:
        raise ValueError("decay exponent must exceed d/2 for a bounded image")
    freqs = [_fft_int_freqs(domain.n).astype(np.float64) for _ in range(domain.d)]
    grids = np.meshgrid(*freqs, indexing="ij")
    jsq = sum(g**2 for g in grids)
    mult = (1.0 + jsq) ** (-decay_a / 2.0)
    op = FourierMultiplierOperator(domain, "spectral-diagonal", mult, background)
    op.decay_a = decay_a
    return op


def periodic_convolution(
    domain: Domain, kernel: GridFunction, background: float = 0.0
) -> FourierMultiplierOperator:
    """Circular convolution with the given kernel plus background."""
    n = domain.n
    f = _fft_int_freqs(n)
    phase1 = np.exp(-1j * np.pi * f / n)
    spec = np.fft.fftn(kernel.reshape())
    if domain.d == 1:
        mult = domain.cell_volume * phase1 * spec
    else:
        mult = domain.cell_volume * phase1[:, None] * phase1[None, :] * spec
    return FourierMultiplierOperator(domain, "periodic-convolution", mult, background)


# ---------------------------------------------------------------------------
# certified image bounds


def sup_image_bound(op: FourierMultiplierOperator, box_lo: float, box_hi: float) -> float:
    """Certified sup-norm bound for F(u) over the box constraint.

    |F_lin(u)(x)| <= sqrt(sum |m_j|^2) * ||u||_L2 and the box caps the L2
    norm by max(|lo|, |hi|).
    """
    if box_hi < box_lo:
        raise ValueError("empty box")
    cap = max(abs(box_lo), abs(box_hi))
    return op.background + cap * np.sqrt(op.sum_sq_multiplier())


def hs_image_radius(
    op: FourierMultiplierOperator, box_lo: float, box_hi: float, s: float
) -> float:
    """Certified bound on sup over the box of the H^s norm of F(u).

    For the spectral-diagonal kind the continuum sum converges only for
    s < a - d/2; larger s is refused.  The background contributes exactly
    its magnitude through the zero frequency.
    """
    if s < 0:
        raise ValueError("smoothness index must be nonnegative")
    if op.kind == "spectral-diagonal" and s >= op.decay_a - op.domain.d / 2:
        raise ValueError("H^s image bound requires s < a - d/2")
    freqs = [_fft_int_freqs(op.domain.n).astype(np.float64) for _ in range(op.domain.d)]
    grids = np.meshgrid(*freqs, indexing="ij")
    jsq = sum(g**2 for g in grids)
    weighted = np.sum((1.0 + jsq) ** s * np.abs(op.mult_fft) ** 2)
    cap = max(abs(box_lo), abs(box_hi))
    return cap * float(np.sqrt(weighted)) + abs(op.background)


# ---------------------------------------------------------------------------
# source instances


@dataclass
class SourceInstance:
    """Truth pair (u, F(u)) with an exact spectral source representation.

    udag - u0 has Fourier coefficients psi(m_j^2) * omega_j for the
    declared source family, so rate predictions apply verbatim.
    """

    op: FourierMultiplierOperator
    family: str
    order: float
    u0: GridFunction
    udag: GridFunction
    gdag: GridFunction
    omega: FourierCoeffs
    omega_norm: float
    shift: float
    predicted_phi: IndexFunction


def _psi_of(family: str, order: float, tau: np.ndarray) -> np.ndarray:
    if family == "holder":
        return tau**order
    with np.errstate(divide="ignore"):
        return np.where(tau < 1.0, (-np.log(np.minimum(tau, 1.0))) ** (-order), np.inf)


def make_source_instance(
    op: FourierMultiplierOperator,
    family: str,
    order: float,
    omega_seed: int,
    scale: float,
    *,
    u0: Optional[GridFunction] = None,
    box_lo: float = 0.0,
    band: Optional[Tuple[int, int]] = None,
    profile_decay: float = 1.0,
    phases: str = "random",
    phi_scale: float = 1.0,
) -> SourceInstance:
    """Draw omega and build the exact source-condition truth pair.

    omega is supported on the frequency band (by Euclidean |j|) with
    squared amplitudes decaying like |j|^(-profile_decay), random or
    cosine-aligned phases, and L2 norm `scale`.  The truth is shifted so
    udag >= box_lo; for the holder family the constant folds into the
    zero mode of omega (psi(m_0^2) = 1 there), for the logarithmic family
    the center u0 moves along with it.
    """
    if family == "holder":
        if not 0 < order <= 0.5:
            raise ValueError("holder source order must lie in (0, 1/2]")
    elif family == "logarithmic":
        if order <= 0:
            raise ValueError("logarithmic source order must be positive")
    else:
        raise ValueError(f"unknown source family {family!r}")
    if scale < 0:
        raise ValueError("scale must be nonnegative")
    dom = op.domain
    if u0 is None:
        u0 = constant(dom, 0.0)
    J = dom.n // 2
    axes = tuple(frequency_axis(dom, J) for _ in range(dom.d))
    grids = np.meshgrid(*[a.astype(np.float64) for a in axes], indexing="ij")
    jabs = np.sqrt(sum(g**2 for g in grids))
    if band is None:
        band = (1, dom.n // 2 - 1)
    jmin, jmax = band
    if jmin < 1 or jmax < jmin:
        raise ValueError("band must satisfy 1 <= jmin <= jmax")
    if jmax > dom.n // 2 - 1:
        raise ValueError("band must stay below the Nyquist frequency")
    mask = (jabs >= jmin) & (jabs <= jmax)

    amp = np.zeros(mask.shape)
    amp[mask] = jabs[mask] ** (-profile_decay / 2.0)

    rng = np.random.default_rng(omega_seed)
    if phases == "random":
        theta = rng.uniform(0.0, 2 * np.pi, size=mask.shape)
    elif phases == "cos-aligned":
        theta = np.zeros(mask.shape)
    else:
        raise ValueError(f"unknown phase mode {phases!r}")
    omega_c = amp * np.exp(1j * theta)

    # enforce omega(-j) = conj(omega(j)) by averaging with the reflection;
    # on the even-length Nyquist set a flip pairs j with -1-j, so shift by
    # one to realign (the unpaired -n/2 row wraps onto itself and is zero)
    flip = tuple(slice(None, None, -1) for _ in range(dom.d))
    refl = omega_c[flip]
    for ax in range(dom.d):
        if axes[ax].size % 2 == 0:
            refl = np.roll(refl, 1, axis=ax)
    omega_c = 0.5 * (omega_c + np.conj(refl))

    nrm = float(np.sqrt(np.sum(np.abs(omega_c) ** 2)))
    if nrm > 0 and scale > 0:
        omega_c *= scale / nrm
    elif scale == 0:
        omega_c[:] = 0.0

    mult = op.multiplier(J)
    psi_vals = _psi_of(family, order, np.abs(mult) ** 2)
    # psi may be infinite off the band (zero frequency for the log family);
    # only multiply where omega is supported
    active = omega_c != 0
    v_coeffs = np.zeros_like(omega_c)
    v_coeffs[active] = psi_vals[active] * omega_c[active]
    v = reconstruct(FourierCoeffs(dom, J, axes, v_coeffs))

    raw = u0.values + v.values
    shift = max(0.0, box_lo - float(np.min(raw)))
    if shift > 0:
        zero_idx = tuple(int(np.flatnonzero(a == 0)[0]) for a in axes)
        if family == "holder":
            # psi(m_0^2) = 1 for spectral-diagonal-like unit zero modes
            psi0 = float(np.real(psi_vals[zero_idx]))
            if not np.isfinite(psi0) or psi0 <= 0:
                raise ValueError("cannot fold shift through the zero mode")
            omega_c[zero_idx] += shift / psi0
        else:
            u0 = GridFunction(dom, u0.values + shift)
    udag = GridFunction(dom, raw + shift)
    gdag = op.apply(udag)
    if np.any(gdag.values < 0):
        raise ValueError("truth image is negative; increase background or box_lo")

    omega = FourierCoeffs(dom, J, axes, omega_c)
    omega_norm = float(np.sqrt(np.sum(np.abs(omega_c) ** 2)))
    return SourceInstance(
        op=op,
        family=family,
        order=order,
        u0=u0,
        udag=udag,
        gdag=gdag,
        omega=omega,
        omega_norm=omega_norm,
        shift=shift,
        predicted_phi=phi_from_spectral(family, order, phi_scale),
    )


def certified_vsc(
    inst: SourceInstance,
    box_lo: float,
    box_hi: float,
    sigma: Optional[float] = None,
) -> IndexFunction:
    """Certified variational smoothness for a holder-1/2 source.

    With udag - u0 = (F*F)^(1/2) omega and quadratic penalty,
    phi(tau) = 2||omega|| sqrt(tau) holds with beta = 1 when tau is the
    squared image distance.  Passing sigma converts to the shifted-KL
    argument through the sup-norm comparison constant over the box.
    """
    if inst.family != "holder" or inst.order != 0.5:
        raise ValueError("certified smoothness implemented for the order-1/2 source")
    base = 2.0 * inst.omega_norm
    if sigma is None:
        return holder(base, 0.5)
    if sigma <= 0:
        raise ValueError("offset must be positive")
    c_box = 2.0 * (sup_image_bound(inst.op, box_lo, box_hi) + sigma)
    return holder(base * np.sqrt(c_box), 0.5)
