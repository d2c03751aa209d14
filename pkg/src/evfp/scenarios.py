"""Canonical initial-data sets used by the acceptance runs and the examples."""

from __future__ import annotations

from .dynamics import ClosureMode, ModelParams, initial_data
from .grid import build_grid, gaussian_with_moments, sample_profile, zero

# cutoff in units of the gaussian width; leaves room before the first regrid
CUTOFF_WIDTHS = 12.0


def matched_gaussian(N: float, rho0: float, a0: float, n_cells: int):
    """Gaussian with particle number N and energy density rho0 on a grid of n_cells cells.

    The grid extent is fixed at CUTOFF_WIDTHS gaussian widths.
    """
    probe = build_grid(n_cells, 12.0 * max(1.0, rho0 * a0**4 / N))
    width = gaussian_with_moments(N, rho0, a0, probe).width
    grid = build_grid(n_cells, CUTOFF_WIDTHS * width)
    profile = gaussian_with_moments(N, rho0, a0, grid)
    return profile, grid


def vacuum(t_end: float = 5.0, eta: float = 1e-3, **knobs):
    """De Sitter: F = 0, a0 = H0 = 1, phi0 solved to 3."""
    p = ModelParams(sigma=0.1, k=0, eta=eta, t_end=t_end, **knobs)
    F0 = sample_profile(zero(), build_grid(8, 1.0))
    return initial_data(F0, 1.0, 1.0, None, p, ClosureMode.SOLVE_PHI0), p


def gaussian_run(phi0: float, sigma: float = 0.1, t_end: float = 20.0, eta: float = 1e-3,
                 n_cells: int = 1000, N: float = 1.0, k: int = 0, **knobs):
    """Gaussian data with number N, a0 = 1 and rho0 = 3 - phi0, so that H0 = 1 for k = 0."""
    rho0 = 3.0 * (1.0 + k) - phi0
    profile, grid = matched_gaussian(N, rho0, 1.0, n_cells)
    p = ModelParams(sigma=sigma, k=k, eta=eta, t_end=t_end, **knobs)
    F0 = sample_profile(profile, grid)
    return initial_data(F0, 1.0, None, phi0, p, ClosureMode.SOLVE_H0), p


def blowup(**kw):
    """phi0 = 0.05 below the threshold sigma N / (H0 a0^3) = 0.1."""
    kw.setdefault("t_end", 20.0)
    return gaussian_run(0.05, **kw)


def global_run(**kw):
    """phi0 = 0.5 above 3 sigma N / (H0 a0^3) = 0.3."""
    kw.setdefault("t_end", 60.0)
    return gaussian_run(0.5, **kw)
