"""Command line entry point: simulate, classify, sweep and fit-blowup."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import numpy as np

from .config import ConfigError, RunConfig, build_initial, check_writable, load_config, sweep_points
from .dynamics import SERIES_COLUMNS, ConstraintError, RunRecord, Termination, simulate
from .fits import FitError, fit_asymptotics, fit_blowup
from .moments import compute_moments
from .regime import Verdict, classify, corollary_window

log = logging.getLogger("evfp")

EXIT_OK = 0
EXIT_STEP_FAILURE = 1
EXIT_USAGE = 2

SWEEP_COLUMNS = ("phi0", "sigma", "Sigma0", "Phi0", "verdict", "in_corollary_window")
RESOLVED_COLUMNS = ("simulated_outcome", "t_stop", "q0_positive", "q_final_negative", "contradiction")


def fmt(x) -> str:
    """Fixed 17-significant-digit rendering; NaN/None become empty fields."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return ""
    return "%.17g" % x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_atomic(files: dict, directory: str) -> None:
    """Write every {name: text} pair to temporaries, then rename them into place."""
    staged, placed = [], []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=directory)
            staged.append((tmp, os.path.join(directory, name)))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        for tmp, final in staged:
            os.replace(tmp, final)
            placed.append(final)
    except BaseException:
        # leave either the complete set or nothing from this call
        for path in [tmp for tmp, _ in staged] + placed:
            if os.path.exists(path):
                os.unlink(path)
        raise


def timeseries_csv(record: RunRecord) -> str:
    cols = [record.column(c) for c in SERIES_COLUMNS]
    return csv_text(SERIES_COLUMNS, zip(*cols))


def read_timeseries(path: str) -> dict:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) if v != "" else math.nan for v in row] for row in reader]
    missing = [c for c in ("t", "H", "a", "phi", "rho", "ricci") if c not in header]
    if missing:
        raise ValueError(f"{path} lacks columns {missing}")
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def run_summary(cfg: RunConfig, record: RunRecord) -> dict:
    N = record.column("N")
    out = dict(
        termination=record.termination.value,
        t_stop=record.t_stop,
        message=record.message,
        steps=record.steps,
        regrids=record.regrids,
        samples=len(record),
        initial=dict(N=record.N0, rho0=record.rho0, a0=record.a0, H0=record.H0, phi0=record.phi0),
        N_drift=float(np.max(np.abs(N / record.N0 - 1.0))) if record.N0 > 0 and N.size else 0.0,
        max_constraint_residual=float(np.max(np.abs(record.column("constraint_residual")))) if N.size else 0.0,
        max_budget_residual=float(np.max(np.abs(record.column("budget_residual")))) if N.size else 0.0,
        tail_warning=record.tail_warning,
        config=cfg.to_dict(),
        blowup_fit=None,
        asymptotic_fit=None,
    )
    if record.termination is Termination.BLOWUP_DETECTED:
        try:
            out["blowup_fit"] = fit_blowup(record.series, record.H0).as_dict()
        except FitError as exc:
            out["fit_error"] = str(exc)
    elif record.termination is Termination.REACHED_T_END and len(record) > 0:
        try:
            out["asymptotic_fit"] = fit_asymptotics(record).as_dict()
        except FitError as exc:
            out["fit_error"] = str(exc)
    return out


def cmd_simulate(cfg: RunConfig) -> int:
    check_writable(cfg.out_dir)
    init, p = build_initial(cfg)
    record = simulate(init, p, cadence=cfg.cadence)
    files = {}
    if "csv" in cfg.formats:
        files["timeseries.csv"] = timeseries_csv(record)
    if "json" in cfg.formats:
        files["summary.json"] = dumps(run_summary(cfg, record))
    write_atomic(files, cfg.out_dir)
    if record.termination is Termination.STEP_FAILURE:
        log.error("step failure at t=%s: %s", record.t_stop, record.message)
        return EXIT_STEP_FAILURE
    log.info("%s after %d steps", record.termination.value, record.steps)
    return EXIT_OK


def verdict_for(cfg: RunConfig, sigma: Optional[float] = None, phi0: Optional[float] = None):
    (state, F0), p = build_initial(cfg, sigma, phi0)
    m = compute_moments(F0, state.a, state.phi, state.H)
    v = classify(m.N, m.rho, state.a, state.H, state.phi, p.sigma, p.k)
    return v, (state, F0), p, m


def cmd_classify(cfg: RunConfig) -> int:
    v, (state, _), p, m = verdict_for(cfg)
    out = v.as_dict()
    out.update(N=m.N, rho0=m.rho, a0=state.a, H0=state.H, phi0=state.phi, sigma=p.sigma, k=p.k)
    sys.stdout.write(dumps(out))
    return EXIT_OK


def _sweep_cell(args):
    cfg, phi0, sigma, resolve = args
    v, init, p, m = verdict_for(cfg, sigma, phi0)
    window = corollary_window(v.Sigma0, v.Phi0, p.k) if p.k != 1 else False
    row = dict(
        phi0=phi0,
        sigma=sigma,
        Sigma0=v.Sigma0,
        Phi0=v.Phi0,
        verdict=v.verdict.value,
        in_corollary_window=window,
    )
    if resolve:
        rec = simulate(init, p, cadence=cfg.cadence)
        q = rec.column("q")
        outcome = rec.termination
        # reaching t_end only contradicts a blow-up verdict once t_end is long enough
        s0 = init[0]
        if p.sigma * m.N > 0:
            horizon = 10.0 * (s0.a**3 * s0.H * s0.phi / (p.sigma * m.N) + 1.0)
        else:
            horizon = math.inf
        contradiction = (
            v.verdict is Verdict.GLOBAL_GUARANTEED and outcome is Termination.BLOWUP_DETECTED
        ) or (
            v.verdict is Verdict.BLOWUP_GUARANTEED
            and outcome is Termination.REACHED_T_END
            and p.t_end >= horizon
        )
        row.update(
            simulated_outcome=outcome.value,
            t_stop=rec.t_stop,
            q0_positive=bool(q.size and q[0] > 0),
            q_final_negative=bool(q.size and q[-1] < 0),
            contradiction=contradiction,
        )
    return row


def cmd_sweep(cfg: RunConfig, resolve: bool = False, jobs: int = 1) -> int:
    if cfg.phi0 is None:
        raise ConfigError("sweeps need phi0 values")
    check_writable(cfg.out_dir)
    points = sweep_points(cfg)
    tasks = [(cfg, phi0, sigma, resolve) for phi0, sigma in points]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_cell, tasks))
    else:
        rows = [_sweep_cell(t) for t in tasks]
    columns = SWEEP_COLUMNS + (RESOLVED_COLUMNS if resolve else ())
    text = csv_text(columns, ([row[c] for c in columns] for row in rows))
    write_atomic({"sweep.csv": text}, cfg.out_dir)
    bad = [r for r in rows if r.get("contradiction")]
    for r in bad:
        log.error("classifier/simulation contradiction at phi0=%s sigma=%s", r["phi0"], r["sigma"])
    return EXIT_STEP_FAILURE if bad else EXIT_OK


def cmd_fit_blowup(path: str) -> int:
    series = read_timeseries(path)
    fit = fit_blowup(series)
    sys.stdout.write(dumps(fit.as_dict()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="evfp", description="Kinetic cosmology simulator")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("simulate", "classify"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
    sp = sub.add_parser("sweep")
    sp.add_argument("--config", required=True)
    sp.add_argument("--resolve", action="store_true", help="simulate every cell")
    sp.add_argument("--jobs", type=int, default=1)
    sp = sub.add_parser("fit-blowup")
    sp.add_argument("timeseries")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "fit-blowup":
            return cmd_fit_blowup(args.timeseries)
        cfg = load_config(args.config)
        if args.command == "simulate":
            if cfg.is_sweep:
                raise ConfigError("simulate takes single sigma and phi0 values; use sweep")
            return cmd_simulate(cfg)
        if args.command == "classify":
            return cmd_classify(cfg)
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        return cmd_sweep(cfg, args.resolve, args.jobs)
    except FitError as exc:
        log.error("fit rejected: %s", exc)
        return EXIT_STEP_FAILURE
    except (ConfigError, ConstraintError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
