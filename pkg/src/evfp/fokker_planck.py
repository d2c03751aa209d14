"""Momentum-space Fokker-Planck step for isotropic distributions.

For F(v) = F(|v|) the operator div(D grad F) with
D^{ij} = (a^2 delta^{ij} + v^i v^j) / sqrt(a^2 + |v|^2) reduces to

    (1/r^2) d/dr ( r^2 sqrt(a^2 + r^2) dF/dr ),

which is advanced here with a conservative Crank-Nicolson scheme.  A
Cartesian explicit-Euler step of the full tensor operator is kept alongside
as an independent check of that reduction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .grid import NEG_TOL, RadialDistribution, RadialGrid


class UndershootError(ArithmeticError):
    """Crank-Nicolson produced negative values; retry with a smaller dt."""


class CorruptStateError(ArithmeticError):
    """The step produced or received non-finite values."""


@dataclass(frozen=True)
class FPStepParams:
    sigma: float
    a: float
    dt: float

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if not self.a > 0:
            raise ValueError(f"a must be > 0, got {self.a}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")


def radial_face_coefficient(a, r):
    """Radial diffusion coefficient r^2 sqrt(a^2 + r^2)."""
    r = np.asarray(r, dtype=float)
    return r * r * np.sqrt(a * a + r * r)


def face_conductance(grid: RadialGrid, a: float) -> np.ndarray:
    """Discrete coefficients at the n-1 interior faces.

    Uses psi_f * (g_i + g_{i+1}) / (r_i + r_{i+1}) with g = sqrt(a^2 + r^2) and
    psi_f = 3 sum_{j<=i} r_j^2 dr.  This equals r_f^2 sqrt(a^2 + r_f^2) up to
    O(dr^2) and makes the discrete energy sum F g r^2 dr grow by exactly
    3 sigma a N dt / (4 pi) per step (zero-flux faces, no truncation loss),
    mirroring the continuous identity.
    """
    r = grid.centers
    g = np.sqrt(a * a + r * r)
    return grid.face_moment[:-1] * (g[:-1] + g[1:]) / (r[:-1] + r[1:])


def _stiffness_bands(grid: RadialGrid, a: float):
    """Diagonal and off-diagonal of the symmetric matrix A with (A F)_i = Phi_{i+1/2} - Phi_{i-1/2}."""
    k = face_conductance(grid, a) / grid.dr
    diag = np.zeros(grid.n_cells)
    diag[:-1] -= k
    diag[1:] -= k
    return diag, k


def generator(grid: RadialGrid, a: float, sigma: float = 1.0) -> np.ndarray:
    """Dense semi-discrete generator L with dF/dt = L F (for tests and small grids)."""
    diag, off = _stiffness_bands(grid, a)
    A = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    return sigma * a * A / grid.weights[:, None]


def apply_generator(F: RadialDistribution, a: float, sigma: float = 1.0) -> np.ndarray:
    """L F computed matrix-free."""
    grid = F.grid
    f = F.values
    flux = face_conductance(grid, a) * np.diff(f) / grid.dr
    div = np.zeros_like(f)
    div[:-1] += flux
    div[1:] -= flux
    return sigma * a * div / grid.weights


def fp_step(F: RadialDistribution, p: FPStepParams) -> RadialDistribution:
    f = F.values
    if p.sigma == 0.0 or not np.any(f):
        return F
    grid = F.grid
    diag, off = _stiffness_bands(grid, p.a)
    theta = 0.5 * p.sigma * p.a * p.dt
    w = grid.weights

    rhs = w * f + theta * (diag * f)
    rhs[:-1] += theta * off * f[1:]
    rhs[1:] += theta * off * f[:-1]

    ab = np.empty((3, grid.n_cells))
    ab[0, 0] = 0.0
    ab[0, 1:] = -theta * off
    ab[1] = w - theta * diag
    ab[2, :-1] = -theta * off
    ab[2, -1] = 0.0
    try:
        new = solve_banded((1, 1), ab, rhs, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise CorruptStateError(f"tridiagonal solve failed: {exc}") from exc
    if not np.all(np.isfinite(new)):
        raise CorruptStateError("Fokker-Planck step produced non-finite values")
    peak = new.max()
    if new.min() < -NEG_TOL * peak:
        raise UndershootError(
            f"undershoot {new.min():.3e} (max {peak:.3e}) at dt={p.dt:.3e}"
        )
    return RadialDistribution(grid, new)


# ---------------------------------------------------------------------------
# Cartesian oracle


@dataclass(frozen=True)
class CartesianGrid:
    """Cell-centred cube [-half_width, half_width]^3 with n points per axis."""

    n: int
    half_width: float

    def __post_init__(self):
        if self.n < 4 or self.n > 64:
            raise ValueError("Cartesian oracle supports 4 <= n <= 64 points per axis")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.n

    def axis(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.h - self.half_width

    def mesh(self):
        x = self.axis()
        return np.meshgrid(x, x, x, indexing="ij")

    def radius(self) -> np.ndarray:
        X, Y, Z = self.mesh()
        return np.sqrt(X * X + Y * Y + Z * Z)


def _diffusion_tensor(a, X, Y, Z):
    s = np.sqrt(a * a + X * X + Y * Y + Z * Z)
    comps = (X, Y, Z)
    return {
        (i, j): ((a * a if i == j else 0.0) + comps[i] * comps[j]) / s
        for i in range(3)
        for j in range(i, 3)
    }


def cartesian_stable_dt(grid: CartesianGrid, sigma: float, a: float) -> float:
    """Largest dt allowed by a Gershgorin bound on the explicit stencil."""
    r_corner = np.sqrt(3.0) * (grid.half_width + grid.h)
    s = np.sqrt(a * a + r_corner**2)
    trace = (3 * a * a + r_corner**2) / s
    offsum = 3.0 * r_corner**2 / (2.0 * s)
    radius = (4.0 * trace + 4.0 * offsum) / grid.h**2
    return 2.0 / (sigma * a * radius) if sigma > 0 else np.inf


def cartesian_operator(F3: np.ndarray, grid: CartesianGrid, a: float) -> np.ndarray:
    """div(D grad F) with second-order central differences in flux form; F = 0 outside the cube."""
    n, h = grid.n, grid.h
    P = np.zeros((n + 2,) * 3)
    P[1:-1, 1:-1, 1:-1] = F3
    x = (np.arange(n + 2) - 0.5) * h - grid.half_width
    out = np.zeros_like(F3)
    inner = slice(1, -1)

    def shift(arr, axis, k):
        idx = [inner, inner, inner]
        idx[axis] = slice(1 + k, n + 1 + k)
        return arr[tuple(idx)]

    xs = [x, x, x]
    for i in range(3):
        # diagonal part: face-centred coefficients
        for sgn in (+1, -1):
            face = [xs[0][1:-1], xs[1][1:-1], xs[2][1:-1]]
            face[i] = 0.5 * (x[1:-1] + x[1 + sgn : n + 1 + sgn])
            Xf, Yf, Zf = np.meshgrid(*face, indexing="ij")
            Dii = _diffusion_tensor(a, Xf, Yf, Zf)[(i, i)]
            out += Dii * (shift(P, i, sgn) - F3) / h**2
        # cross terms d_i (D^{ij} d_j F), j != i
        for j in range(3):
            if j == i:
                continue
            key = (min(i, j), max(i, j))
            for sgn in (+1, -1):
                node = [xs[0][1:-1], xs[1][1:-1], xs[2][1:-1]]
                node[i] = x[1 + sgn : n + 1 + sgn]
                Xn, Yn, Zn = np.meshgrid(*node, indexing="ij")
                Dij = _diffusion_tensor(a, Xn, Yn, Zn)[key]
                idx_p = [inner, inner, inner]
                idx_m = [inner, inner, inner]
                idx_p[i] = idx_m[i] = slice(1 + sgn, n + 1 + sgn)
                idx_p[j] = slice(2, n + 2)
                idx_m[j] = slice(0, n)
                dj = P[tuple(idx_p)] - P[tuple(idx_m)]
                out += sgn * Dij * dj / (4.0 * h * h)
    return out


def fp_step_cartesian_oracle(F3: np.ndarray, grid: CartesianGrid, p: FPStepParams) -> np.ndarray:
    """One explicit-Euler step of dF/dt = sigma a div(D grad F) on a Cartesian cube."""
    F3 = np.asarray(F3, dtype=float)
    if F3.shape != (grid.n,) * 3:
        raise ValueError(f"field shape {F3.shape} does not match grid n={grid.n}")
    limit = cartesian_stable_dt(grid, p.sigma, p.a)
    if p.dt > limit:
        raise ValueError(f"dt={p.dt:g} exceeds the explicit stability bound {limit:.3e}")
    if p.sigma == 0.0:
        return F3.copy()
    return F3 + p.dt * p.sigma * p.a * cartesian_operator(F3, grid, p.a)
