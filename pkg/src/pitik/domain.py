"""Uniform discretization of the unit torus [0,1)^d with spectral tooling.

Grid functions are piecewise constant per cell with nodes at cell centers
(k+1/2)*h.  On this periodic grid the midpoint rule is spectrally accurate,
so quadrature, Fourier coefficients and Sobolev norms of band-limited
functions are exact up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Tuple

import numpy as np


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Domain:
    """Uniform grid over the unit torus.

    Parameters
    ----------
    d : int
        Dimension, 1 or 2.
    n : int
        Cells per axis; a power of two, at least 8.
    """

    d: int
    n: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.d}")
        if self.n < 8 or not _is_power_of_two(self.n):
            raise ValueError(f"cells per axis must be a power of two >= 8, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def ncells(self) -> int:
        return self.n**self.d

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    def cell_centers(self) -> Tuple[np.ndarray, ...]:
        """Per-axis coordinates of the cell centers."""
        axis = (np.arange(self.n) + 0.5) * self.h
        return (axis,) * self.d

    def meshgrid(self) -> Tuple[np.ndarray, ...]:
        """Full coordinate arrays of shape `shape`, indexing 'ij'."""
        return tuple(np.meshgrid(*self.cell_centers(), indexing="ij"))


@dataclass
class GridFunction:
    """Real-valued function represented by its cell-center values.

    Values are stored flat in row-major cell order; `reshape` recovers the
    (n,)*d layout.
    """

    domain: Domain
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64).reshape(-1)
        if self.values.size != self.domain.ncells:
            raise ValueError(
                f"expected {self.domain.ncells} values, got {self.values.size}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function values must be finite")

    def reshape(self) -> np.ndarray:
        return self.values.reshape(self.domain.shape)

    def copy(self) -> "GridFunction":
        return GridFunction(self.domain, self.values.copy())

    def __add__(self, other):
        return GridFunction(self.domain, self.values + _values_of(other))

    def __sub__(self, other):
        return GridFunction(self.domain, self.values - _values_of(other))

    def __mul__(self, scalar):
        return GridFunction(self.domain, self.values * float(scalar))

    __rmul__ = __mul__


def _values_of(other):
    return other.values if isinstance(other, GridFunction) else other


def constant(domain: Domain, c: float) -> GridFunction:
    return GridFunction(domain, np.full(domain.ncells, float(c)))


def from_callable(domain: Domain, f: Callable) -> GridFunction:
    """Sample a callable at the cell centers."""
    grids = domain.meshgrid()
    return GridFunction(domain, np.asarray(f(*grids), dtype=np.float64).reshape(-1))


# ---------------------------------------------------------------------------
# quadrature and inner products


def integrate(f: GridFunction) -> float:
    """Midpoint quadrature sum(f) * h^d."""
    return f.domain.cell_volume * float(np.sum(f.values))


def l2_inner(f: GridFunction, g: GridFunction) -> float:
    return f.domain.cell_volume * float(np.dot(f.values, g.values))


def l2_norm(f: GridFunction) -> float:
    return float(np.sqrt(f.domain.cell_volume) * np.linalg.norm(f.values))


# ---------------------------------------------------------------------------
# Fourier analysis

# Frequencies per axis run through -J..J; at the Nyquist cutoff J = n/2 the
# +n/2 mode aliases -n/2 on the grid, so only -n/2 is kept and the set
# coincides with the FFT frequency set.


def frequency_axis(domain: Domain, J: int) -> np.ndarray:
    if J < 0:
        raise ValueError("cutoff must be nonnegative")
    if 2 * J > domain.n:
        raise ValueError(f"cutoff {J} beyond Nyquist frequency {domain.n // 2}")
    if 2 * J == domain.n:
        return np.arange(-J, J)
    return np.arange(-J, J + 1)


@dataclass
class FourierCoeffs:
    """L2 inner products with the torus exponentials exp(2*pi*i j.x).

    `coeffs[k...]` is the coefficient for the multi-index built from the
    per-axis `freqs` arrays.
    """

    domain: Domain
    maxfreq: int
    freqs: Tuple[np.ndarray, ...]
    coeffs: np.ndarray

    def jsq(self) -> np.ndarray:
        """|j|^2 on the coefficient grid."""
        grids = np.meshgrid(*[f.astype(np.float64) for f in self.freqs], indexing="ij")
        return sum(g**2 for g in grids)

    def power(self) -> np.ndarray:
        return np.abs(self.coeffs) ** 2

    def get(self, j) -> complex:
        """Coefficient for multi-index j (int for d=1, pair for d=2)."""
        if self.domain.d == 1:
            j = (j,) if np.isscalar(j) else tuple(j)
        idx = tuple(
            int(np.flatnonzero(axis == jj)[0]) for axis, jj in zip(self.freqs, j)
        )
        return complex(self.coeffs[idx])


def _phase(domain: Domain, freqs: np.ndarray) -> np.ndarray:
    # midpoint sampling shift: exp(-i*pi*j/n) per axis
    return np.exp(-1j * np.pi * freqs / domain.n)


def fourier_coeffs(f: GridFunction, J: int) -> FourierCoeffs:
    """Inner products <f, phi_j> for all |j|_inf <= J via the FFT.

    Exact (to rounding) for the piecewise evaluation at cell centers;
    raises for cutoffs beyond Nyquist.
    """
    dom = f.domain
    axes = tuple(frequency_axis(dom, J) for _ in range(dom.d))
    spec = np.fft.fftn(f.reshape())
    idx = tuple(ax % dom.n for ax in axes)
    if dom.d == 1:
        sub = spec[idx[0]]
        phase = _phase(dom, axes[0])
    else:
        sub = spec[np.ix_(idx[0], idx[1])]
        phase = _phase(dom, axes[0])[:, None] * _phase(dom, axes[1])[None, :]
    coeffs = dom.cell_volume * phase * sub
    return FourierCoeffs(dom, J, axes, coeffs)


def reconstruct(fc: FourierCoeffs) -> GridFunction:
    """Evaluate the (possibly truncated) Fourier sum back on the grid."""
    dom = fc.domain
    spec = np.zeros(dom.shape, dtype=np.complex128)
    idx = tuple(ax % dom.n for ax in fc.freqs)
    if dom.d == 1:
        phase = _phase(dom, fc.freqs[0])
        spec[idx[0]] = fc.coeffs / (dom.cell_volume * phase)
    else:
        phase = _phase(dom, fc.freqs[0])[:, None] * _phase(dom, fc.freqs[1])[None, :]
        spec[np.ix_(idx[0], idx[1])] = fc.coeffs / (dom.cell_volume * phase)
    vals = np.fft.ifftn(spec).real
    return GridFunction(dom, vals.reshape(-1))


def sobolev_norm(f: GridFunction, s: float, J: int) -> float:
    """Truncated H^s norm (sum over |j|_inf <= J of (1+|j|^2)^s |<f,phi_j>|^2)^(1/2)."""
    if s < 0:
        raise ValueError("smoothness index must be nonnegative")
    fc = fourier_coeffs(f, J)
    weights = (1.0 + fc.jsq()) ** s
    return float(np.sqrt(np.sum(weights * fc.power())))


# ---------------------------------------------------------------------------
# serialization


def write_grid_csv(path, f: GridFunction) -> None:
    """GridFunction CSV: header index,value in row-major cell order."""
    with open(path, "w") as fh:
        fh.write("index,value\n")
        for i, v in enumerate(f.values):
            fh.write(f"{i},{v:.17g}\n")


def read_grid_csv(path, domain: Domain) -> GridFunction:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    order = np.argsort(data[:, 0])
    return GridFunction(domain, data[order, 1])
