"""Velocity-space moments entering the Einstein equations.

All integrals use the midpoint rule on cell centres with the weights
r_i^2 dr, i.e. the same discrete measure the Fokker-Planck step conserves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import RadialDistribution

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class MomentSet:
    N: float
    rho: float
    P: float
    l2: float
    q: float
    Q: Optional[float]
    ricci: float


class FrozenMoments:
    """Energy density and pressure of a fixed F as functions of the scale factor.

    Used inside Runge-Kutta stages where F is held fixed and only a moves.
    """

    def __init__(self, F: RadialDistribution):
        grid = F.grid
        self.r2 = grid.centers**2
        self.wf = FOUR_PI * grid.weights * F.values
        self.N = float(self.wf.sum())
        self.empty = not np.any(F.values)

    def energy_pressure(self, a: float) -> tuple[float, float]:
        if self.empty:
            return 0.0, 0.0
        g = np.sqrt(a * a + self.r2)
        a4 = a**4
        rho = float(np.dot(self.wf, g)) / a4
        P = float(np.dot(self.wf, self.r2 / g)) / (3.0 * a4)
        return rho, P


def compute_moments(F: RadialDistribution, a: float, phi: float, H: float) -> MomentSet:
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    fm = FrozenMoments(F)
    rho, P = fm.energy_pressure(a)
    l2 = math.sqrt(FOUR_PI * float(np.dot(F.grid.weights, F.values**2)))
    q = rho + 3.0 * P - 2.0 * phi
    Q = q / (6.0 * H * H) if H != 0.0 else None
    ricci = 4.0 * phi - (rho + 3.0 * P)
    return MomentSet(N=fm.N, rho=rho, P=P, l2=l2, q=q, Q=Q, ricci=ricci)


def gamma_moment(F: RadialDistribution, a: float, gamma: float) -> float:
    """4 pi int F (a^2 + r^2)^(gamma/2) r^2 dr."""
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    r2 = F.grid.centers**2
    wf = FOUR_PI * F.grid.weights * F.values
    if gamma == 1.0:
        return float(np.dot(wf, np.sqrt(a * a + r2)))
    return float(np.dot(wf, (a * a + r2) ** (0.5 * gamma)))
