"""Coupled evolution of (a, H, phi, F).

One step is a Strang splitting: half a step of the Friedmann ODEs with F
frozen (classical RK4), a full Crank-Nicolson Fokker-Planck step with the
scale factor frozen at its mid-step value, then the second ODE half-step.
The Hamiltonian constraint is monitored, never enforced.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .fokker_planck import (
    CorruptStateError,
    FPStepParams,
    UndershootError,
    apply_generator,
    fp_step,
)
from .grid import NEG_TOL, RadialDistribution
from .moments import FrozenMoments, MomentSet, compute_moments

log = logging.getLogger(__name__)

CONSTRAINT_CHECK_TOL = 1e-10
GEOMETRIC_RATIO = 10.0 ** 0.05

SERIES_COLUMNS = (
    "t",
    "a",
    "H",
    "phi",
    "N",
    "rho",
    "P",
    "q",
    "Q",
    "ricci",
    "l2",
    "constraint_residual",
    "budget_residual",
    "tail_mass_fraction",
)


class ConstraintError(ValueError):
    """Initial data violate one of the admissibility conditions."""


class Termination(str, enum.Enum):
    REACHED_T_END = "REACHED_T_END"
    BLOWUP_DETECTED = "BLOWUP_DETECTED"
    STEP_FAILURE = "STEP_FAILURE"


class ClosureMode(str, enum.Enum):
    CHECK = "CHECK"
    SOLVE_PHI0 = "SOLVE_PHI0"
    SOLVE_H0 = "SOLVE_H0"


@dataclass(frozen=True)
class CosmoState:
    t: float
    a: float
    H: float
    phi: float


@dataclass(frozen=True)
class ModelParams:
    sigma: float
    k: int = 0
    eta: float = 1e-3
    dt_max: float = 0.05
    a_floor: Optional[float] = None  # None: 1e-6 * a0
    H_ceiling: float = 1e8
    t_end: float = 1.0
    regrid: bool = True
    regrid_tol: float = 1e-12
    tail_warn: float = 1e-8
    max_halvings: int = 40

    def __post_init__(self):
        if self.k not in (-1, 0, 1):
            raise ValueError(f"k must be -1, 0 or 1, got {self.k}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        for name in ("eta", "dt_max", "H_ceiling"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.a_floor is not None and not self.a_floor > 0:
            raise ValueError("a_floor must be positive")
        if not self.t_end >= 0:
            raise ValueError("t_end must be >= 0")


@dataclass
class RunRecord:
    series: dict
    termination: Termination
    t_stop: Optional[float]
    params: ModelParams
    N0: float
    rho0: float
    a0: float
    H0: float
    phi0: float
    tail_warning: bool = False
    steps: int = 0
    regrids: int = 0
    final: Optional[RadialDistribution] = field(default=None, repr=False)
    message: str = ""

    def __len__(self):
        return len(self.series["t"])

    def column(self, name: str) -> np.ndarray:
        return self.series[name]


# ---------------------------------------------------------------------------
# right-hand sides and diagnostics


def ode_rhs(s: CosmoState, m: MomentSet, p: ModelParams):
    """(da/dt, dH/dt, dphi/dt)."""
    return (
        s.H * s.a,
        -(m.rho + m.P) / 2.0 + p.k / s.a**2,
        -3.0 * p.sigma * m.N / s.a**3,
    )


def constraint_raw(H, a, rho, phi, k) -> float:
    return H * H - (rho + phi) / 3.0 + k / (a * a)


def constraint_residual(s: CosmoState, m: MomentSet, k: int) -> float:
    """H^2 - (rho + phi)/3 + k/a^2, normalised by the size of its terms."""
    raw = constraint_raw(s.H, s.a, m.rho, s.phi, k)
    scale = max(s.H * s.H, (abs(m.rho) + abs(s.phi)) / 3.0, 1.0 / s.a**2)
    return raw / scale


def adapt_dt(s: CosmoState, m: MomentSet, p: ModelParams) -> float:
    dt = p.dt_max
    if s.H != 0.0:
        dt = min(dt, p.eta / abs(s.H))
    dphi = 3.0 * p.sigma * m.N / s.a**3
    if dphi > 0.0:
        # rho enters the scale so dt does not collapse while phi crosses zero
        dt = min(dt, p.eta * (abs(s.phi) + m.rho) / dphi)
    energy = m.rho + abs(s.phi)
    if energy > 0.0:
        dt = min(dt, p.eta / math.sqrt(energy))
    remaining = p.t_end - s.t
    if remaining > 0.0:
        dt = min(dt, remaining)
    return dt


# ---------------------------------------------------------------------------
# initial data


def initial_data(
    F0: RadialDistribution,
    a0: float,
    H0: Optional[float],
    phi0: Optional[float],
    p: ModelParams,
    mode: ClosureMode = ClosureMode.CHECK,
):
    """Close the Hamiltonian constraint at t = 0 and return (state, F0)."""
    mode = ClosureMode(mode)
    if not a0 > 0:
        raise ConstraintError(f"a0 > 0 is required, got {a0}")
    m = compute_moments(F0, a0, 0.0, 1.0)
    rho0 = m.rho
    if mode is ClosureMode.SOLVE_PHI0:
        if H0 is None or not H0 > 0:
            raise ConstraintError(f"H0 > 0 is required, got {H0}")
        phi0 = 3.0 * (H0 * H0 + p.k / a0**2) - rho0
    elif mode is ClosureMode.SOLVE_H0:
        if phi0 is None:
            raise ConstraintError("phi0 is required to solve for H0")
        disc = (rho0 + phi0) / 3.0 - p.k / a0**2
        if not disc > 0:
            raise ConstraintError(
                f"H0^2 = (rho0 + phi0)/3 - k/a0^2 = {disc:.6g} has no positive root (H0 > 0 required)"
            )
        H0 = math.sqrt(disc)
    else:
        if H0 is None or phi0 is None:
            raise ConstraintError("CHECK mode needs both H0 and phi0")
        if not H0 > 0:
            raise ConstraintError(f"H0 > 0 is required, got {H0}")
    if not phi0 > 0:
        raise ConstraintError(f"phi0 > 0 is required, got {phi0:.6g}")
    state = CosmoState(0.0, float(a0), float(H0), float(phi0))
    if mode is ClosureMode.CHECK:
        m = compute_moments(F0, a0, phi0, H0)
        res = constraint_residual(state, m, p.k)
        if abs(res) > CONSTRAINT_CHECK_TOL:
            raise ConstraintError(
                f"constraint H0^2 = (rho0 + phi0)/3 - k/a0^2 violated: normalised residual {res:.3e}"
            )
    return state, F0


# ---------------------------------------------------------------------------
# stepping


def _rk4_half(y, fm: FrozenMoments, p: ModelParams, h: float):
    """RK4 on y = (a, H, phi, J) with F frozen; J accumulates int H a^3 P dt."""
    k_curv = p.k
    heat = 3.0 * p.sigma * fm.N

    def f(a, H):
        rho, P = fm.energy_pressure(a)
        a3 = a * a * a
        return H * a, -(rho + P) / 2.0 + k_curv / (a * a), -heat / a3, H * a3 * P

    a, H, phi, J = y
    k1 = f(a, H)
    k2 = f(a + 0.5 * h * k1[0], H + 0.5 * h * k1[1])
    k3 = f(a + 0.5 * h * k2[0], H + 0.5 * h * k2[1])
    k4 = f(a + h * k3[0], H + h * k3[1])
    c = h / 6.0
    return tuple(
        yi + c * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
        for yi, d1, d2, d3, d4 in zip(y, k1, k2, k3, k4)
    )


def _step(s: CosmoState, F: RadialDistribution, p: ModelParams, dt: float, J: float = 0.0):
    y = (s.a, s.H, s.phi, J)
    y = _rk4_half(y, FrozenMoments(F), p, 0.5 * dt)
    if not (y[0] > 0 and all(math.isfinite(v) for v in y)):
        raise CorruptStateError(f"non-finite or non-positive state after ODE half-step: {y}")
    F = fp_step(F, FPStepParams(p.sigma, y[0], dt))
    y = _rk4_half(y, FrozenMoments(F), p, 0.5 * dt)
    if not (y[0] > 0 and all(math.isfinite(v) for v in y)):
        raise CorruptStateError(f"non-finite or non-positive state after ODE half-step: {y}")
    return CosmoState(s.t + dt, y[0], y[1], y[2]), F, y[3]


def step(s: CosmoState, F: RadialDistribution, p: ModelParams, dt: float):
    """One Strang step of length dt; returns the new (state, distribution)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    s2, F2, _ = _step(s, F, p, dt)
    return s2, F2


def regrid(F: RadialDistribution, a: float) -> RadialDistribution:
    """Double r_max by merging neighbouring cell pairs.

    The merge conserves the discrete particle number exactly.  The energy
    sum F sqrt(a^2 + r^2) r^2 dr at the current a is then restored with a
    small multiple of the (number-conserving) diffusion generator, whose
    energy change is known in closed form.
    """
    old = F.grid
    new = old.coarsened()
    wf = old.weights * F.values
    if old.n_cells % 2:
        wf = np.append(wf, 0.0)
    pairs = wf.reshape(-1, 2).sum(axis=1)
    vals = np.zeros(new.n_cells)
    vals[: pairs.size] = pairs / new.weights[: pairs.size]
    merged = RadialDistribution(new, vals)

    e_old = float(np.dot(wf[: old.n_cells], np.sqrt(a * a + old.centers**2)))
    g_new = np.sqrt(a * a + new.centers**2)
    e_new = float(np.dot(new.weights * vals, g_new))
    LF = apply_generator(merged, a)
    rate = float(np.dot(new.weights * LF, g_new))
    if rate == 0.0:
        return merged
    fixed = vals + (e_old - e_new) / rate * LF
    if fixed.min() < -NEG_TOL * fixed.max():
        log.warning("energy-preserving regrid would undershoot; keeping plain merge")
        return merged
    return RadialDistribution(new, fixed)


def _outer_half_fraction(F: RadialDistribution) -> float:
    w = F.grid.weights * F.values
    total = w.sum()
    if total <= 0.0:
        return 0.0
    return float(w[F.grid.n_cells // 2 :].sum() / total)


# ---------------------------------------------------------------------------
# driver


class _Sampler:
    def __init__(self, k, sigma, N0, rho0a3, t0):
        self.cols = {name: [] for name in SERIES_COLUMNS}
        self.cols["transport"] = []
        self.k, self.sigma, self.N0, self.rho0a3, self.t0 = k, sigma, N0, rho0a3, t0

    def add(self, s: CosmoState, m: MomentSet, J: float, F: RadialDistribution):
        c = self.cols
        if c["t"] and s.t <= c["t"][-1]:
            return
        budget = 0.0
        if self.rho0a3 > 0:
            budget = (
                m.rho * s.a**3 - self.rho0a3 - 3.0 * self.sigma * self.N0 * (s.t - self.t0) + 3.0 * J
            ) / self.rho0a3
        row = dict(
            t=s.t,
            a=s.a,
            H=s.H,
            phi=s.phi,
            N=m.N,
            rho=m.rho,
            P=m.P,
            q=m.q,
            Q=np.nan if m.Q is None else m.Q,
            ricci=m.ricci,
            l2=m.l2,
            constraint_residual=constraint_residual(s, m, self.k),
            budget_residual=budget,
            tail_mass_fraction=F.tail_fraction(),
            transport=J,
        )
        for key, val in row.items():
            c[key].append(val)

    def arrays(self):
        return {k: np.asarray(v, dtype=float) for k, v in self.cols.items()}


def simulate(init, p: ModelParams, cadence: float = 0.05) -> RunRecord:
    """Advance constrained initial data until t_end or a blow-up threshold."""
    s, F = init
    if not cadence > 0:
        raise ValueError("cadence must be positive")
    m = compute_moments(F, s.a, s.phi, s.H)
    N0, rho0, a0, H0 = m.N, m.rho, s.a, s.H
    a_floor = p.a_floor if p.a_floor is not None else 1e-6 * a0
    sampler = _Sampler(p.k, p.sigma, N0, rho0 * a0**3, s.t)

    def finish(term, t_stop=None, msg=""):
        return RunRecord(
            series=sampler.arrays(),
            termination=term,
            t_stop=t_stop,
            params=p,
            N0=N0,
            rho0=rho0,
            a0=a0,
            H0=H0,
            phi0=s0.phi,
            tail_warning=tail_warning,
            steps=steps,
            regrids=regrids,
            final=F,
            message=msg,
        )

    s0 = s
    steps = regrids = 0
    tail_warning = False
    if p.t_end <= s.t:
        return finish(Termination.REACHED_T_END)

    J = 0.0
    sampler.add(s, m, J, F)
    n_sample = 1
    next_sample = s0.t + cadence
    geo_H = 10.0 * abs(H0)

    while s.t < p.t_end:
        dt = adapt_dt(s, m, p)
        target = min(next_sample, p.t_end)
        remaining = target - s.t
        clipped = False
        if remaining <= dt * (1.0 + 1e-6):
            dt, clipped = remaining, True
        elif remaining < 1.5 * dt:
            dt = 0.5 * remaining

        for _ in range(p.max_halvings + 1):
            try:
                s_new, F_new, J_new = _step(s, F, p, dt, J)
                break
            except UndershootError:
                dt *= 0.5
                clipped = False
            except CorruptStateError as exc:
                log.debug("step rejected: %s", exc)
                dt *= 0.5
                clipped = False
        else:
            return finish(Termination.STEP_FAILURE, s.t, f"no acceptable step after {p.max_halvings} halvings")

        if clipped:
            s_new = replace(s_new, t=target)
        s, F, J = s_new, F_new, J_new
        steps += 1

        if p.regrid and p.sigma > 0 and _outer_half_fraction(F) > p.regrid_tol:
            F = regrid(F, s.a)
            regrids += 1
            log.debug("regrid at t=%.6g: r_max -> %.6g", s.t, F.grid.r_max)

        m = compute_moments(F, s.a, s.phi, s.H)
        if F.tail_fraction() > p.tail_warn:
            tail_warning = True

        if s.a < a_floor or abs(s.H) > p.H_ceiling:
            sampler.add(s, m, J, F)
            return finish(Termination.BLOWUP_DETECTED, s.t)

        if clipped and target == next_sample:
            sampler.add(s, m, J, F)
            n_sample += 1
            next_sample = s0.t + n_sample * cadence
        elif abs(s.H) > geo_H:
            sampler.add(s, m, J, F)
            geo_H = abs(s.H) * GEOMETRIC_RATIO

    sampler.add(s, m, J, F)
    return finish(Termination.REACHED_T_END)


def rho_a3_budget(record: RunRecord) -> np.ndarray:
    """Residual of rho a^3 = rho0 a0^3 + 3 sigma N t - 3 int H a^3 P, relative to rho0 a0^3."""
    t = record.column("t")
    if t.size < 2:
        raise ValueError("budget needs at least two samples")
    rho0a3 = record.rho0 * record.a0**3
    if rho0a3 == 0.0:
        return np.zeros_like(t)
    a = record.column("a")
    if "transport" in record.series:
        J = record.column("transport")
    else:
        J = transport_trapezoid(record)
    lhs = record.column("rho") * a**3
    return (lhs - rho0a3 - 3.0 * record.params.sigma * record.N0 * (t - t[0]) + 3.0 * J) / rho0a3


def transport_trapezoid(record: RunRecord) -> np.ndarray:
    """Cumulative trapezoid of H a^3 P over the recorded samples."""
    t = record.column("t")
    f = record.column("H") * record.column("a") ** 3 * record.column("P")
    out = np.zeros_like(t)
    out[1:] = np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(t))
    return out
