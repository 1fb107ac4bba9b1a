"""Laws for the distance between the base station and the requesting device."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

__all__ = [
    "DistanceModel",
    "Fixed",
    "UniformDisk",
    "PoissonDisk",
    "TabulatedPdf",
    "from_mean_distance",
]


class DistanceModel:
    """Common interface of the distance laws.

    Subclasses provide ``pdf``, ``support``, ``mean`` and ``kernel_spec`` (the
    integer code and parameters consumed by the Monte Carlo kernel).
    """

    kind = "abstract"
    point_mass = False

    def pdf(self, r):
        raise NotImplementedError

    @property
    def support(self):
        raise NotImplementedError

    @property
    def mean(self):
        raise NotImplementedError

    def kernel_spec(self):
        raise NotImplementedError

    def breakpoints(self):
        """Interior points where the pdf is not smooth."""
        return ()

    def sample(self, rng, size):
        """Draw ``size`` distances using the same transforms as the MC kernel."""
        code, par, grid, dens, cum = self.kernel_spec()
        if code == kernels.DIST_FIXED:
            return np.full(size, par[0])
        if code == kernels.DIST_UNIFORM:
            return par[0] * np.sqrt(rng.random(size))
        if code == kernels.DIST_POISSON:
            return par[0] * np.maximum(rng.random(size), rng.random(size))
        return kernels.tabulated_inverse_cdf(rng.random(size), grid, dens, cum, backend="numpy")

    def describe(self):
        return self.kind


@dataclass(frozen=True)
class Fixed(DistanceModel):
    """Device at a known distance ``r`` metres."""

    r: float
    kind = "fixed"
    point_mass = True

    def __post_init__(self):
        object.__setattr__(self, "r", float(self.r))
        if not self.r > 0:
            raise ValueError(f"fixed distance must be positive, got {self.r}")

    def pdf(self, r):
        raise TypeError("a fixed distance has no density")

    @property
    def support(self):
        return (self.r, self.r)

    @property
    def mean(self):
        return self.r

    def kernel_spec(self):
        return kernels.DIST_FIXED, np.array([self.r]), None, None, None

    def describe(self):
        return f"fixed(r={self.r:g})"


@dataclass(frozen=True)
class UniformDisk(DistanceModel):
    """Device uniform over a disk of radius ``R``: ``f(r) = 2 r / R**2``."""

    R: float
    kind = "uniform"

    def __post_init__(self):
        object.__setattr__(self, "R", float(self.R))
        if not self.R > 0:
            raise ValueError(f"disk radius must be positive, got {self.R}")

    def pdf(self, r):
        r = np.asarray(r, dtype=np.float64)
        return np.where((r >= 0) & (r <= self.R), 2.0 * r / self.R**2, 0.0)

    @property
    def support(self):
        return (0.0, self.R)

    @property
    def mean(self):
        return 2.0 * self.R / 3.0

    def kernel_spec(self):
        return kernels.DIST_UNIFORM, np.array([self.R]), None, None, None

    def describe(self):
        return f"uniform(R={self.R:g})"


@dataclass(frozen=True)
class PoissonDisk(DistanceModel):
    """Requesting device picked uniformly among the points of a homogeneous
    Poisson process of ``intensity`` points per m**2 in a disk of radius
    ``R``, conditioned on the disk holding at least one point.

    The chosen point is uniform on the disk, so the radial law is the same as
    :class:`UniformDisk`.  The MC sampler draws it through a different
    transform (maximum of two uniforms) so the two kinds stay distinct code
    paths.
    """

    intensity: float
    R: float
    kind = "poisson"

    def __post_init__(self):
        object.__setattr__(self, "intensity", float(self.intensity))
        object.__setattr__(self, "R", float(self.R))
        if not self.intensity > 0:
            raise ValueError(f"intensity must be positive, got {self.intensity}")
        if not self.R > 0:
            raise ValueError(f"disk radius must be positive, got {self.R}")

    @property
    def expected_points(self):
        return self.intensity * math.pi * self.R**2

    def pdf(self, r):
        r = np.asarray(r, dtype=np.float64)
        return np.where((r >= 0) & (r <= self.R), 2.0 * r / self.R**2, 0.0)

    @property
    def support(self):
        return (0.0, self.R)

    @property
    def mean(self):
        return 2.0 * self.R / 3.0

    def kernel_spec(self):
        return kernels.DIST_POISSON, np.array([self.R]), None, None, None

    def describe(self):
        return f"poisson(lambda={self.intensity:g}, R={self.R:g})"


@dataclass(frozen=True)
class TabulatedPdf(DistanceModel):
    """Piecewise-linear density through ``(grid[k], density[k])``.

    The density is rescaled so the interpolant integrates to exactly one.
    """

    grid: np.ndarray
    density: np.ndarray
    cumulative: np.ndarray = field(init=False, repr=False)
    kind = "tabulated"

    def __post_init__(self):
        grid = np.array(self.grid, dtype=np.float64).ravel()
        dens = np.array(self.density, dtype=np.float64).ravel()
        if grid.size < 2 or grid.size != dens.size:
            raise ValueError("need at least two (r, density) pairs of equal length")
        if grid[0] < 0 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be non-negative and strictly increasing")
        if np.any(dens < 0) or not np.all(np.isfinite(dens)):
            raise ValueError("density must be finite and non-negative")
        seg = 0.5 * (dens[1:] + dens[:-1]) * np.diff(grid)
        total = seg.sum()
        if not total > 0:
            raise ValueError("density has zero mass")
        dens = dens / total
        cum = np.concatenate(([0.0], np.cumsum(seg / total)))
        cum[-1] = 1.0
        for arr in (grid, dens, cum):
            arr.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "density", dens)
        object.__setattr__(self, "cumulative", cum)

    def pdf(self, r):
        r = np.asarray(r, dtype=np.float64)
        inside = (r >= self.grid[0]) & (r <= self.grid[-1])
        return np.where(inside, np.interp(r, self.grid, self.density), 0.0)

    @property
    def support(self):
        return (float(self.grid[0]), float(self.grid[-1]))

    @property
    def mean(self):
        a, b = self.grid[:-1], self.grid[1:]
        p0, p1 = self.density[:-1], self.density[1:]
        mid = 0.5 * (a + b)
        # r * pdf is quadratic on each segment, so Simpson's rule is exact
        return float(np.sum((b - a) / 6.0 * (a * p0 + 4.0 * mid * 0.5 * (p0 + p1) + b * p1)))

    def breakpoints(self):
        return tuple(self.grid[1:-1])

    def kernel_spec(self):
        return kernels.DIST_TABULATED, np.array([0.0]), self.grid, self.density, self.cumulative

    def describe(self):
        return f"tabulated(n={self.grid.size}, support=[{self.grid[0]:g}, {self.grid[-1]:g}])"


def from_mean_distance(kind, mean_distance, intensity=1e-3):
    """Build a law of the given kind whose mean distance is ``mean_distance``.

    Disk laws use ``R = 3/2 * E[r]`` since ``E[r] = 2R/3`` for ``f(r) = 2r/R**2``.
    """
    if kind == "fixed":
        return Fixed(mean_distance)
    if kind == "uniform":
        return UniformDisk(1.5 * mean_distance)
    if kind == "poisson":
        return PoissonDisk(intensity, 1.5 * mean_distance)
    raise ValueError(f"cannot build a {kind!r} law from a mean distance")
