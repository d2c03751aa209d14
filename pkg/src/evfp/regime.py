"""Closed-form classification of constrained initial data.

Each sufficient condition for global existence or finite-time blow-up is
evaluated separately, and every condition that holds is reported.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special

from .dynamics import ConstraintError, RunRecord, constraint_raw

CONSTRAINT_TOL = 1e-10


class Verdict(str, enum.Enum):
    GLOBAL_GUARANTEED = "GLOBAL_GUARANTEED"
    BLOWUP_GUARANTEED = "BLOWUP_GUARANTEED"
    UNDETERMINED = "UNDETERMINED"


@dataclass(frozen=True)
class Criterion:
    """One sufficient condition that held: ``quantity`` compared against ``threshold``."""

    name: str
    quantity: str
    value: float
    relation: str
    threshold: float

    def as_dict(self) -> dict:
        return dict(
            name=self.name,
            quantity=self.quantity,
            value=self.value,
            relation=self.relation,
            threshold=self.threshold,
        )


@dataclass(frozen=True)
class RegimeVerdict:
    verdict: Verdict
    fired_criteria: tuple
    Sigma0: float
    Phi0: float
    phi_m: float
    constraint_residual: float
    candidates: tuple = field(default=())

    def __post_init__(self):
        if (self.verdict is Verdict.UNDETERMINED) != (len(self.fired_criteria) == 0):
            raise ValueError("fired_criteria must be empty exactly when the verdict is UNDETERMINED")

    def as_dict(self) -> dict:
        return dict(
            verdict=self.verdict.value,
            fired_criteria=[c.as_dict() for c in self.fired_criteria],
            candidates=[c.as_dict() for c in self.candidates],
            Sigma0=self.Sigma0,
            Phi0=self.Phi0,
            phi_m=self.phi_m,
            constraint_residual=self.constraint_residual,
        )


def erfc(x: float) -> float:
    """Complementary error function 2/sqrt(pi) int_x^inf exp(-t^2) dt."""
    return float(special.erfc(x))


def blowup_threshold(sigma: float, N: float, H0: float, a0: float, k: int = 0) -> float:
    """phi0 below this value forces finite-time blow-up.

    For k = 1 the bound carries a factor erfc(x) exp(x^2), which is evaluated
    as erfcx(x) so that large H0 N does not overflow.
    """
    if not H0 > 0 or not a0 > 0:
        raise ValueError("H0 > 0 and a0 > 0 are required")
    if N < 0 or sigma < 0:
        raise ValueError("N and sigma must be nonnegative")
    if k not in (-1, 0, 1):
        raise ValueError(f"k must be -1, 0 or 1, got {k}")
    if k == 1:
        x = 9.0 * H0 * N / (4.0 * math.sqrt(2.0))
        return 9.0 * sigma * N * N / (4.0 * a0**3) * math.sqrt(math.pi / 2.0) * float(special.erfcx(x))
    return sigma * N / (H0 * a0**3)


def global_threshold_g3(sigma: float, N: float, a0: float, k: int, beta: float = 1.0) -> float:
    """(3 / (beta^2 a0^2)) [k_+ + 3 (sigma N / 6)^(2/3)]."""
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    k_plus = max(k, 0)
    return 3.0 / (beta * beta * a0 * a0) * (k_plus + 3.0 * (sigma * N / 6.0) ** (2.0 / 3.0))


def _g2(sigma: float, H0: float, rho0: float, a0: float) -> Optional[Criterion]:
    s = 3.0 * sigma / H0
    x = rho0 * a0 * a0
    if s <= 1.0:
        if x < 1.5:
            return Criterion("G2", "rho0*a0^2", x, "<", 1.5)
        return None
    bound = 1.5 / s * math.exp(1.0 - 1.0 / s)
    if x <= bound:
        return Criterion("G2", "rho0*a0^2", x, "<=", bound)
    return None


def classify(
    N: float,
    rho0: float,
    a0: float,
    H0: float,
    phi0: float,
    sigma: float,
    k: int = 0,
    beta: Optional[float] = None,
    tol: float = CONSTRAINT_TOL,
) -> RegimeVerdict:
    """Evaluate every blow-up and global-existence condition on constrained data.

    ``beta`` in (0, 1) replaces the limiting test beta -> 1 of G3 by the
    non-strict inequality at that fixed beta.
    """
    if k not in (-1, 0, 1):
        raise ValueError(f"k must be -1, 0 or 1, got {k}")
    if not (a0 > 0 and H0 > 0 and phi0 > 0):
        raise ConstraintError("a0 > 0, H0 > 0 and phi0 > 0 are required")
    if N < 0 or rho0 < 0 or sigma < 0:
        raise ValueError("N, rho0 and sigma must be nonnegative")
    raw = constraint_raw(H0, a0, rho0, phi0, k)
    scale = max(H0 * H0, (rho0 + phi0) / 3.0, 1.0 / a0**2)
    residual = raw / scale
    if abs(residual) > tol:
        raise ConstraintError(
            f"data violate H0^2 = (rho0 + phi0)/3 - k/a0^2 (normalised residual {residual:.3e})"
        )

    blow, glob, candidates = [], [], []
    thr = blowup_threshold(sigma, N, H0, a0, k)
    if phi0 < thr:
        blow.append(Criterion("B1", "phi0", phi0, "<", thr))
    if k in (0, -1):
        g1 = 3.0 * sigma * N / (H0 * a0**3)
        if phi0 >= g1:
            glob.append(Criterion("G1", "phi0", phi0, ">=", g1))
    if k == 1:
        c = _g2(sigma, H0, rho0, a0)
        if c is not None:
            glob.append(c)
    if beta is None:
        g3 = global_threshold_g3(sigma, N, a0, k)
        if phi0 > g3:
            glob.append(Criterion("G3", "phi0", phi0, ">", g3))
    else:
        if not 0.0 < beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        g3 = global_threshold_g3(sigma, N, a0, k, beta)
        if phi0 >= g3:
            glob.append(Criterion("G3", "phi0", phi0, ">=", g3))

    phi_m = min(4.0 / (N * N) if N > 0 else math.inf, 9.0 / (4.0 * rho0 * a0**4) if rho0 > 0 else math.inf)
    if k == 1 and phi0 >= phi_m:
        candidates.append(Criterion("criteria2-candidate", "phi0", phi0, ">=", phi_m))

    if blow and glob:
        raise AssertionError(
            f"blow-up and global criteria fired together: {[c.name for c in blow + glob]}"
        )
    if blow:
        verdict, fired = Verdict.BLOWUP_GUARANTEED, blow
    elif glob:
        verdict, fired = Verdict.GLOBAL_GUARANTEED, glob
    else:
        verdict, fired = Verdict.UNDETERMINED, []
    return RegimeVerdict(
        verdict=verdict,
        fired_criteria=tuple(fired),
        Sigma0=sigma / H0,
        Phi0=phi0 / rho0 if rho0 > 0 else math.inf,
        phi_m=phi_m,
        constraint_residual=residual,
        candidates=tuple(candidates),
    )


def corollary_window(Sigma0: float, Phi0: float, k: int) -> bool:
    """True iff 3 Sigma0 < Phi0 < 1/2 (flat or open slices only)."""
    if k == 1:
        raise ValueError("the deceleration window is only available for k in {0, -1}")
    if k not in (0, -1):
        raise ValueError(f"k must be -1, 0 or 1, got {k}")
    return 3.0 * Sigma0 < Phi0 < 0.5


def record_outcome(record: RunRecord) -> dict:
    """Post-hoc reading of a finished run.

    For k in {0, -1} a run whose phi stayed nonnegative is consistent with a
    global solution, and phi < 0 signals an eventual blow-up.
    """
    phi = record.column("phi")
    out = dict(
        termination=record.termination.value,
        phi_min=float(phi.min()) if phi.size else math.nan,
        phi_stayed_nonnegative=bool(phi.size and np.all(phi >= 0.0)),
    )
    if record.params.k in (0, -1) and phi.size:
        out["phi_sign_predicts_blowup"] = not out["phi_stayed_nonnegative"]
    return out
