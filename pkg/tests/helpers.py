"""Shared test utilities."""

import numpy as np
from scipy.interpolate import CubicSpline

from evfp.fokker_planck import CartesianGrid, FPStepParams, fp_step, fp_step_cartesian_oracle
from evfp.grid import build_grid, gaussian, sample_profile


def radial_vs_cartesian(n: int, half_width: float = 6.0, dt: float = 1e-4, sigma: float = 1.0, a: float = 1.0):
    """One step of both schemes on exp(-|v|^2).

    The radial step runs on a grid with the Cartesian spacing; its increment
    is carried to every Cartesian point by an even cubic spline in r.
    Returns (L1 difference / L1 of the Cartesian output,
             L1 difference / L1 of the Cartesian increment).
    """
    cg = CartesianGrid(n, half_width)
    R = cg.radius()
    F3 = np.exp(-R * R)
    p = FPStepParams(sigma, a, dt)
    out3 = fp_step_cartesian_oracle(F3, cg, p)
    nr = int(np.ceil(np.sqrt(3.0) * half_width / cg.h)) + 2
    rg = build_grid(nr, nr * cg.h)
    F = sample_profile(gaussian(1.0, 1.0), rg)
    dF = fp_step(F, p).values - F.values
    rc = rg.centers
    spline = CubicSpline(np.concatenate([-rc[::-1], rc]), np.concatenate([dF[::-1], dF]))
    outr3 = F3 + spline(R)
    diff = np.abs(out3 - outr3).sum()
    return diff / np.abs(out3).sum(), diff / np.abs(out3 - F3).sum()
