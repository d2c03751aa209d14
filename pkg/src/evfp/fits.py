"""Rate fitting near a finite-time singularity and in the late expanding regime."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .dynamics import RunRecord, Termination

MIN_POINTS = 5
BLOWUP_QUANTITIES = ("H", "a", "phi", "rho", "ricci")

# exponent corridors for |y| ~ c (t_max - t)^p in the flat and open cases
CORRIDORS = {
    "H": (-1.0, -0.5),
    "a": (0.5, 1.0),
    "phi": (-2.0, -0.5),
    "rho": (-2.0, -1.5),
}


class FitError(ValueError):
    """The series does not support the requested fit."""


def _affine_zero(t: np.ndarray, inv: np.ndarray) -> float:
    slope, intercept = np.polyfit(t, inv, 1)
    if slope == 0.0:
        raise FitError("1/H has no trend in the tail window")
    return -intercept / slope


def estimate_tmax(t, H, h_ref: Optional[float] = None, max_iter: int = 50) -> float:
    """Zero crossing of an affine fit of 1/H against t over the last decade of t_max - t.

    Samples qualify when H < -10 |h_ref|; ``h_ref`` defaults to the first H.
    The window is refined until it stops changing.
    """
    t = np.asarray(t, dtype=float)
    H = np.asarray(H, dtype=float)
    if t.shape != H.shape or t.ndim != 1:
        raise FitError("t and H must be 1-d arrays of equal length")
    if h_ref is None:
        if t.size == 0:
            raise FitError("empty series")
        h_ref = H[0]
    mask = H < -10.0 * abs(h_ref)
    idx = np.flatnonzero(mask)
    if idx.size < MIN_POINTS:
        raise FitError(f"need >= {MIN_POINTS} samples with H < -10|H0|, got {idx.size}")
    # keep the last contiguous run of qualifying samples
    gaps = np.flatnonzero(np.diff(idx) > 1)
    if gaps.size:
        idx = idx[gaps[-1] + 1 :]
    tq, Hq = t[idx], H[idx]
    if tq.size < MIN_POINTS:
        raise FitError(f"need >= {MIN_POINTS} contiguous samples with H < -10|H0|")
    if np.any(np.diff(tq) <= 0) or np.any(np.diff(Hq) >= 0):
        raise FitError("tail of H is not strictly decreasing in strictly increasing t")
    inv = 1.0 / Hq
    t_last = tq[-1]
    # fit in times relative to the last sample; near blow-up t_max - t is
    # many orders of magnitude below t itself
    tau = tq - t_last

    window = np.zeros(tq.size, dtype=bool)
    window[-MIN_POINTS:] = True
    lead = _affine_zero(tau[window], inv[window])
    for _ in range(max_iter):
        if not lead > 0.0:
            raise FitError(f"affine zero crossing {t_last + lead!r} precedes the last sample {t_last!r}")
        new = -tau <= 9.0 * lead
        if new.sum() < MIN_POINTS:
            new[-MIN_POINTS:] = True
        if np.array_equal(new, window):
            break
        window = new
        lead = _affine_zero(tau[window], inv[window])
    if not lead > 0.0:
        raise FitError(f"affine zero crossing {t_last + lead!r} precedes the last sample {t_last!r}")
    return float(t_last + lead)


def fit_power(t, y, t_max: float):
    """Least squares of log|y| on log(t_max - t); returns (p, c, rms residual)."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size < MIN_POINTS:
        raise FitError(f"need >= {MIN_POINTS} points, got {t.size}")
    if np.any(t >= t_max):
        raise FitError("all sample times must precede t_max")
    if np.any(y == 0.0) or not np.all(np.isfinite(y)):
        raise FitError("y must be finite and nonzero in the window")
    x = np.log(t_max - t)
    if np.ptp(x) == 0.0:
        raise FitError("zero spread in log(t_max - t)")
    ly = np.log(np.abs(y))
    A = np.column_stack([x, np.ones_like(x)])
    (p, logc), *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - A @ np.array([p, logc])
    return float(p), float(math.exp(logc)), float(np.sqrt(np.mean(res * res)))


@dataclass(frozen=True)
class BlowupFit:
    t_max_est: float
    t_max_err: float
    exponents: dict  # quantity -> (p, c)
    residuals: dict  # quantity -> rms log residual
    window: tuple
    residual: float
    ricci_ratio: float  # ricci(last) / |ricci(0)|

    def corridor_checks(self, delta: float = 0.05) -> dict:
        """Whether each fitted exponent lies in its corridor widened by delta + t_max_err."""
        d = delta + self.t_max_err
        out = {}
        for name, (lo, hi) in CORRIDORS.items():
            p = self.exponents[name][0]
            out[name] = bool(lo - d <= p <= hi + d)
        out["ricci"] = bool(self.ricci_ratio < -1e3)
        return out

    def as_dict(self, delta: float = 0.05) -> dict:
        return dict(
            t_max_est=self.t_max_est,
            t_max_err=self.t_max_err,
            window=list(self.window),
            residual=self.residual,
            exponents={k: dict(p=p, c=c, rms=self.residuals[k]) for k, (p, c) in self.exponents.items()},
            ricci_ratio=self.ricci_ratio,
            corridors=self.corridor_checks(delta),
        )


def fit_blowup(series: Mapping[str, np.ndarray], h_ref: Optional[float] = None) -> BlowupFit:
    """Extrapolate t_max from H, then fit power laws over the last decade of t_max - t."""
    t = np.asarray(series["t"], dtype=float)
    H = np.asarray(series["H"], dtype=float)
    if h_ref is None:
        h_ref = H[0]
    t_max = estimate_tmax(t, H, h_ref)
    t_last = t[-1]
    win = (H < -10.0 * abs(h_ref)) & ((t_max - t) <= 10.0 * (t_max - t_last))
    if win.sum() < MIN_POINTS:
        win = np.zeros_like(win)
        win[-MIN_POINTS:] = True
    if win[0]:
        raise FitError("fit window reaches the first sample")
    tw = t[win]
    exps, res = {}, {}
    for name in BLOWUP_QUANTITIES:
        y = np.asarray(series[name], dtype=float)[win]
        p, c, r = fit_power(tw, y, t_max)
        exps[name], res[name] = (p, c), r
    ricci = np.asarray(series["ricci"], dtype=float)
    ricci_ratio = ricci[-1] / abs(ricci[0]) if ricci[0] != 0.0 else -math.inf
    return BlowupFit(
        t_max_est=t_max,
        t_max_err=0.5 * float(t[-1] - t[-2]),
        exponents=exps,
        residuals=res,
        window=(float(tw[0]), float(tw[-1])),
        residual=float(np.sqrt(np.mean(np.square(list(res.values()))))),
        ricci_ratio=float(ricci_ratio),
    )


@dataclass(frozen=True)
class AsymptoticFit:
    phi_inf_est: float
    H_limit_est: float
    rate: Optional[float]
    window: tuple
    residual: Optional[float]
    H_matches: bool

    def as_dict(self) -> dict:
        return dict(
            phi_inf_est=self.phi_inf_est,
            H_limit_est=self.H_limit_est,
            rate=self.rate,
            window=list(self.window),
            residual=self.residual,
            H_matches=self.H_matches,
        )


def fit_asymptotics(record: RunRecord, floor: float = 1e-10) -> AsymptoticFit:
    """Late-time limits of a run that reached t_end with phi > 0.

    H_limit is the mean of H over the last tenth of the run.  The decay rate
    of phi - phi_inf is a log-linear fit over the samples where that
    difference still exceeds ``floor * |phi_inf|`` and H has settled to
    within 1% of its limit; it is None when phi is constant.
    """
    if record.termination is not Termination.REACHED_T_END:
        raise FitError(f"run did not reach t_end ({record.termination.value})")
    t = record.column("t")
    phi = record.column("phi")
    H = record.column("H")
    if t.size < MIN_POINTS:
        raise FitError("too few samples")
    phi_inf = float(phi[-1])
    if not phi_inf > 0:
        raise FitError("phi did not stay positive")
    t0, t_end = float(t[0]), float(t[-1])
    if t_end - t0 < 20.0 / math.sqrt(phi_inf / 3.0):
        raise FitError(
            f"window too short: t_end - t0 = {t_end - t0:.4g} < 20/sqrt(phi_inf/3) = {20.0 / math.sqrt(phi_inf / 3.0):.4g}"
        )
    tail = t >= t_end - 0.1 * (t_end - t0)
    H_lim = float(np.mean(H[tail]))
    target = math.sqrt(phi_inf / 3.0)
    diff = phi - phi_inf
    rate = residual = None
    window = (float(t[tail][0]), t_end)
    if np.any(diff != 0.0):
        settled = np.abs(H - H_lim) < 0.01 * H_lim
        first = int(np.argmax(settled)) if settled.any() else t.size
        sel = np.zeros(t.size, dtype=bool)
        sel[first:] = diff[first:] > floor * abs(phi_inf)
        if sel.sum() >= MIN_POINTS:
            slope, intercept = np.polyfit(t[sel], np.log(diff[sel]), 1)
            fit = slope * t[sel] + intercept
            residual = float(np.sqrt(np.mean((np.log(diff[sel]) - fit) ** 2)))
            rate = float(-slope)
            window = (float(t[sel][0]), float(t[sel][-1]))
    return AsymptoticFit(
        phi_inf_est=phi_inf,
        H_limit_est=H_lim,
        rate=rate,
        window=window,
        residual=residual,
        H_matches=bool(abs(H_lim - target) < 0.01 * target),
    )
