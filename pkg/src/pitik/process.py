"""Sampling and handling of rescaled Poisson point processes.

The observation with exposure t is the random measure G_t = (1/t) sum of
Dirac masses at the points of a Poisson process with intensity t*g on the
torus.  For a piecewise constant g the simulation is exact: a Poisson
total count, multinomial allocation over cells, then uniform placement
inside each cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import Domain, GridFunction


@dataclass
class PointData:
    """Realized points of the process, exposure-weighted as (1/t) sum of Diracs."""

    t: float
    points: np.ndarray  # (N, d), coordinates in [0, 1)

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=np.float64)
        if self.points.ndim != 2:
            raise ValueError("points must be an (N, d) array")
        if self.t <= 0:
            raise ValueError("exposure must be positive")

    @property
    def count(self) -> int:
        return self.points.shape[0]


@dataclass
class BinnedCounts:
    """Per-cell counts of a realization, flat row-major order."""

    domain: Domain
    t: float
    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.ascontiguousarray(self.counts, dtype=np.int64).reshape(-1)
        if self.counts.size != self.domain.ncells:
            raise ValueError("counts do not match the grid")

    def density(self) -> GridFunction:
        """Empirical density counts / (t * cell volume); integrates to N/t."""
        return GridFunction(
            self.domain, self.counts / (self.t * self.domain.cell_volume)
        )


def replicate_seed(master_seed: int, replicate: int) -> int:
    """Per-replicate stream seed: master XOR replicate index."""
    return int(master_seed) ^ int(replicate)


def sample_poisson(gdag: GridFunction, t: float, rng: np.random.Generator) -> PointData:
    """Draw one realization of the process with intensity t * gdag.

    Exact for piecewise constant intensities.  Cell masses must be
    nonnegative; a zero-mass intensity yields an empty realization.
    """
    if t <= 0:
        raise ValueError("exposure must be positive")
    vals = gdag.values
    if np.any(vals < 0):
        raise ValueError("intensity must be nonnegative")
    dom = gdag.domain
    mass = vals * dom.cell_volume
    total = float(np.sum(mass))
    if total == 0.0:
        return PointData(t, np.empty((0, dom.d)))
    total_count = int(rng.poisson(t * total))
    if total_count == 0:
        return PointData(t, np.empty((0, dom.d)))
    cell_counts = rng.multinomial(total_count, mass / total)
    flat = np.repeat(np.arange(dom.ncells), cell_counts)
    idx = np.unravel_index(flat, dom.shape)
    jitter = rng.random((total_count, dom.d))
    pts = (np.stack(idx, axis=1) + jitter) * dom.h
    return PointData(t, pts)


def sample_binned(gdag: GridFunction, t: float, rng: np.random.Generator) -> BinnedCounts:
    """Draw per-cell counts of the process with intensity t * gdag.

    Equal in distribution to binning `sample_poisson` output (independent
    Poisson counts per cell), skipping the point positions.  Use when the
    realization is only ever consumed through cell aggregates.
    """
    if t <= 0:
        raise ValueError("exposure must be positive")
    vals = gdag.values
    if np.any(vals < 0):
        raise ValueError("intensity must be nonnegative")
    counts = rng.poisson(t * vals * gdag.domain.cell_volume)
    return BinnedCounts(gdag.domain, t, counts)


def point_cells(data: PointData, domain: Domain) -> np.ndarray:
    """Flat cell index of each point."""
    if data.points.shape[1] != domain.d:
        raise ValueError("point dimension does not match the grid")
    idx = np.floor(data.points * domain.n).astype(np.int64)
    np.clip(idx, 0, domain.n - 1, out=idx)
    return np.ravel_multi_index(tuple(idx.T), domain.shape)


def bin_counts(data: PointData, domain: Domain) -> BinnedCounts:
    counts = np.bincount(point_cells(data, domain), minlength=domain.ncells)
    return BinnedCounts(domain, data.t, counts)


def integrate_against(psi: GridFunction, data) -> float:
    """Empirical integral of psi against the rescaled measure, sum psi(x_i)/t.

    Binned counts give the identical value for piecewise constant psi,
    so both realization forms are accepted.
    """
    if isinstance(data, BinnedCounts):
        if data.domain.ncells != psi.domain.ncells:
            raise ValueError("count grid does not match psi")
        return float(np.dot(psi.values, data.counts)) / data.t
    cells = point_cells(data, psi.domain)
    return float(np.sum(psi.values[cells])) / data.t


def write_point_csv(path, data: PointData) -> None:
    """Point CSV: comment line with the exposure, then one point per row."""
    d = data.points.shape[1]
    header = ",".join(f"x{a + 1}" for a in range(d))
    with open(path, "w") as fh:
        fh.write(f"# t={data.t:.17g}\n")
        fh.write(header + "\n")
        for row in data.points:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def read_point_csv(path) -> PointData:
    with open(path) as fh:
        first = fh.readline().strip()
        if not first.startswith("# t="):
            raise ValueError("missing exposure comment line")
        t = float(first[4:])
        header = fh.readline().strip()
        d = len(header.split(","))
        body = fh.read().strip()
    if not body:
        return PointData(t, np.empty((0, d)))
    pts = np.array([[float(x) for x in line.split(",")] for line in body.splitlines()])
    return PointData(t, pts)


def write_counts_csv(path, binned: BinnedCounts) -> None:
    with open(path, "w") as fh:
        fh.write(f"# t={binned.t:.17g}\n")
        fh.write("index,count\n")
        for i, c in enumerate(binned.counts):
            fh.write(f"{i},{c}\n")


def read_counts_csv(path, domain: Domain) -> BinnedCounts:
    with open(path) as fh:
        first = fh.readline().strip()
        if not first.startswith("# t="):
            raise ValueError("missing exposure comment line")
        t = float(first[4:])
        data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
    counts = np.zeros(domain.ncells, dtype=np.int64)
    counts[data[:, 0].astype(np.int64)] = data[:, 1].astype(np.int64)
    return BinnedCounts(domain, t, counts)
