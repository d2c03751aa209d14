"""Radial momentum grid and isotropic distribution functions.

The distribution F(t, |v|) is stored as cell-centred samples on a uniform
grid over [0, r_max].  Faces sit at multiples of dr, so the first face is
exactly r = 0 and the last one exactly r_max.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

MIN_CELLS = 8
NEG_TOL = 1e-12


def _frozen(x) -> np.ndarray:
    arr = np.array(x, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RadialGrid:
    """Uniform cell-centred grid on [0, r_max]."""

    n_cells: int
    r_max: float
    faces: np.ndarray = field(init=False, repr=False, compare=False)
    centers: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)
    face_moment: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n, r_max = self.n_cells, self.r_max
        faces = np.arange(n + 1, dtype=float) * (r_max / n)
        faces[-1] = r_max
        centers = (np.arange(n, dtype=float) + 0.5) * (r_max / n)
        dr = r_max / n
        weights = centers**2 * dr
        object.__setattr__(self, "faces", _frozen(faces))
        object.__setattr__(self, "centers", _frozen(centers))
        # midpoint-rule volume weights r_i^2 dr (the 4*pi is applied by callers)
        object.__setattr__(self, "weights", _frozen(weights))
        # running sums 3 * sum_{j<=i} r_j^2 dr at faces 1..n; r^3 up to O(dr^2)
        object.__setattr__(self, "face_moment", _frozen(3.0 * np.cumsum(weights)))

    @property
    def dr(self) -> float:
        return self.r_max / self.n_cells

    def coarsened(self) -> "RadialGrid":
        """Grid with the same cell count and twice the extent (pairs of cells merged)."""
        return RadialGrid(self.n_cells, 2.0 * self.r_max)


def build_grid(n_cells: int, r_max: float) -> RadialGrid:
    if int(n_cells) != n_cells or n_cells < MIN_CELLS:
        raise ValueError(f"n_cells must be an integer >= {MIN_CELLS}, got {n_cells!r}")
    if not np.isfinite(r_max) or r_max <= 0:
        raise ValueError(f"r_max must be positive, got {r_max!r}")
    return RadialGrid(int(n_cells), float(r_max))


@dataclass(frozen=True)
class RadialDistribution:
    """Cell-centred samples of an isotropic phase-space density."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_cells,):
            raise ValueError(
                f"expected {self.grid.n_cells} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("distribution contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def number(self) -> float:
        """Discrete particle number 4*pi*sum F_i r_i^2 dr."""
        return 4.0 * np.pi * float(np.dot(self.grid.weights, self.values))

    def tail_fraction(self, cells: int = 1) -> float:
        """Fraction of the particle number held by the outermost ``cells`` cells."""
        total = float(np.dot(self.grid.weights, self.values))
        if total <= 0.0:
            return 0.0
        tail = float(np.dot(self.grid.weights[-cells:], self.values[-cells:]))
        return tail / total


@dataclass(frozen=True)
class Profile:
    """Named initial profile: ``gaussian`` (amplitude, width), ``ball`` (amplitude, radius) or ``zero``."""

    name: str
    amplitude: float = 0.0
    width: float = 0.0

    def __post_init__(self):
        if self.name not in ("gaussian", "ball", "zero"):
            raise ValueError(f"unknown profile {self.name!r}")
        if self.name != "zero":
            if not self.amplitude > 0:
                raise ValueError(f"{self.name} profile needs a positive amplitude")
            if not self.width > 0:
                label = "width" if self.name == "gaussian" else "radius"
                raise ValueError(f"{self.name} profile needs a positive {label}")

    def number(self) -> float:
        """Particle number of the continuous profile on all of R^3."""
        if self.name == "gaussian":
            return self.amplitude * np.pi**1.5 * self.width**3
        if self.name == "ball":
            return self.amplitude * 4.0 * np.pi / 3.0 * self.width**3
        return 0.0

    def mass_beyond(self, radius: float) -> float:
        """Analytic particle number outside the sphere |v| = radius."""
        if self.name == "gaussian":
            w = self.width
            x = radius / w
            # 4 pi A int_R^inf exp(-r^2/w^2) r^2 dr
            inner = 0.5 * x * np.exp(-x * x) + 0.25 * np.sqrt(np.pi) * special.erfc(x)
            return 4.0 * np.pi * self.amplitude * w**3 * inner
        if self.name == "ball":
            if radius >= self.width:
                return 0.0
            return self.amplitude * 4.0 * np.pi / 3.0 * (self.width**3 - radius**3)
        return 0.0


def gaussian(amplitude: float, width: float) -> Profile:
    return Profile("gaussian", amplitude, width)


def ball(amplitude: float, radius: float) -> Profile:
    return Profile("ball", amplitude, radius)


def zero() -> Profile:
    return Profile("zero")


def sample_profile(profile: Profile, grid: RadialGrid) -> RadialDistribution:
    r = grid.centers
    if profile.name == "gaussian":
        values = profile.amplitude * np.exp(-((r / profile.width) ** 2))
    elif profile.name == "ball":
        values = np.where(r <= profile.width, profile.amplitude, 0.0)
    else:
        values = np.zeros_like(r)
    return RadialDistribution(grid, values)


def check_cutoff(profile: Profile, grid: RadialGrid, tol: float = 1e-12) -> None:
    """Reject grids whose cutoff drops more than ``tol`` of the profile's mass."""
    total = profile.number()
    if total == 0.0:
        return
    if profile.name == "gaussian" and profile.width > grid.r_max / 6.0:
        raise ValueError(
            f"gaussian width {profile.width} exceeds r_max/6 = {grid.r_max / 6.0}"
        )
    lost = profile.mass_beyond(grid.r_max)
    if lost > tol * total:
        raise ValueError(
            f"r_max = {grid.r_max} truncates {lost / total:.3e} of the initial mass (limit {tol:g})"
        )


def gaussian_with_moments(N: float, rho0: float, a0: float, grid: RadialGrid) -> Profile:
    """Gaussian profile whose discrete particle number is N and energy density is rho0 at a0.

    Since rho >= N / a^3 for any distribution, rho0 must exceed N / a0^3.
    The width is found by root bracketing on the discrete moments, and the
    amplitude then rescales the number exactly.
    """
    if N <= 0 or a0 <= 0:
        raise ValueError("N and a0 must be positive")
    if rho0 * a0**3 <= N:
        raise ValueError(f"rho0 = {rho0} is below the bound N / a0^3 = {N / a0**3}")
    r = grid.centers
    w4 = 4.0 * np.pi * grid.weights
    g = np.sqrt(a0 * a0 + r * r)

    def mean_energy(width):
        f = np.exp(-((r / width) ** 2))
        return np.dot(w4, f * g) / np.dot(w4, f)

    target = rho0 * a0**4 / N
    lo, hi = 2.0 * grid.dr, grid.r_max / 6.0
    if not mean_energy(lo) < target < mean_energy(hi):
        raise ValueError(
            f"no gaussian width in [{lo:g}, {hi:g}] reaches rho0 = {rho0} on this grid"
        )
    width = optimize.brentq(lambda w: mean_energy(w) - target, lo, hi, xtol=1e-15, rtol=1e-15)
    unit = np.dot(w4, np.exp(-((r / width) ** 2)))
    return gaussian(N / unit, width)
