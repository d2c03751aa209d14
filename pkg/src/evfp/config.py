"""INI run configuration: parsing, validation and construction of initial data."""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .dynamics import ClosureMode, ModelParams, initial_data
from .grid import (
    Profile,
    build_grid,
    check_cutoff,
    gaussian_with_moments,
    sample_profile,
)
from .scenarios import CUTOFF_WIDTHS, matched_gaussian


class ConfigError(ValueError):
    """Invalid configuration text or values."""


# key -> (type, required); "range" values may hold a sweep specification
SCHEMA = {
    "model": {"sigma": ("range", True), "k": (int, False)},
    "initial": {
        "profile": (str, True),
        "amplitude": (float, False),
        "width": (float, False),
        "radius": (float, False),
        "N": (float, False),
        "rho0": (float, False),
        "a0": (float, False),
        "H0": (float, False),
        "phi0": ("range", False),
        "solve_phi0": (bool, False),
        "solve_H0": (bool, False),
    },
    "numerics": {
        "n_cells": (int, False),
        "r_max": (float, False),
        "eta": (float, False),
        "dt_max": (float, False),
        "a_floor": (float, False),
        "H_ceiling": (float, False),
        "t_end": (float, False),
        "regrid": (bool, False),
    },
    "output": {"dir": (str, False), "cadence": (float, False), "formats": (str, False)},
}

FORMATS = ("csv", "json")


def parse_values(text: str) -> tuple:
    """A scalar, a comma list ``x1, x2, ...`` or ``start:stop:num`` (inclusive linspace)."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range {text!r} must look like start:stop:num")
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
        if num < 1:
            raise ValueError(f"range {text!r} is empty")
        return tuple(float(x) for x in np.linspace(start, stop, num))
    vals = tuple(float(x) for x in text.split(",") if x.strip())
    if not vals:
        raise ValueError("empty value list")
    return vals


@dataclass(frozen=True)
class RunConfig:
    sigma: tuple
    k: int = 0
    profile: str = "gaussian"
    amplitude: Optional[float] = None
    width: Optional[float] = None
    radius: Optional[float] = None
    N: Optional[float] = None
    rho0: Optional[float] = None
    a0: float = 1.0
    H0: Optional[float] = None
    phi0: Optional[tuple] = None
    mode: ClosureMode = ClosureMode.CHECK
    n_cells: int = 400
    r_max: Optional[float] = None
    eta: float = 1e-3
    dt_max: float = 0.05
    a_floor: Optional[float] = None
    H_ceiling: float = 1e8
    t_end: float = 1.0
    regrid: bool = True
    out_dir: str = "."
    cadence: float = 0.05
    formats: tuple = FORMATS
    source: str = field(default="", compare=False, repr=False)

    @property
    def is_sweep(self) -> bool:
        return len(self.sigma) > 1 or (self.phi0 is not None and len(self.phi0) > 1)

    def scalar(self, name: str) -> float:
        vals = getattr(self, name)
        if len(vals) != 1:
            raise ConfigError(f"{name} must be a single value here, got {len(vals)}")
        return vals[0]

    def model_params(self, sigma: Optional[float] = None) -> ModelParams:
        return ModelParams(
            sigma=self.scalar("sigma") if sigma is None else sigma,
            k=self.k,
            eta=self.eta,
            dt_max=self.dt_max,
            a_floor=self.a_floor,
            H_ceiling=self.H_ceiling,
            t_end=self.t_end,
            regrid=self.regrid,
        )

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name == "source":
                continue
            v = getattr(self, f.name)
            if isinstance(v, ClosureMode):
                v = v.value
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out


def _convert(section: str, key: str, raw: str, kind):
    try:
        if kind == "range":
            return parse_values(raw)
        if kind is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind is int:
            val = float(raw)
            if val != int(val):
                raise ValueError(f"not an integer: {raw!r}")
            return int(val)
        if kind is float:
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from None


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None

    values = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            values[key] = _convert(section, key, raw, SCHEMA[section][key][0])
    for section, keys in SCHEMA.items():
        for key, (_, required) in keys.items():
            if required and key not in values:
                raise ConfigError(f"missing mandatory key {key!r} in [{section}]")

    k = values.get("k", 0)
    if k not in (-1, 0, 1):
        raise ConfigError(f"k must be -1, 0 or 1, got {k}")
    if any(not s >= 0 for s in values["sigma"]):
        raise ConfigError("sigma must be >= 0")

    solve_phi0 = values.get("solve_phi0", False)
    solve_H0 = values.get("solve_H0", False)
    has_phi0 = "phi0" in values
    has_H0 = "H0" in values
    chosen = [solve_phi0, solve_H0]
    if sum(chosen) > 1 or (solve_phi0 and has_phi0):
        raise ConfigError("exactly one closure mode: give phi0, solve_phi0 = true or solve_H0 = true")
    if solve_phi0:
        mode = ClosureMode.SOLVE_PHI0
        if not has_H0:
            raise ConfigError("solve_phi0 needs H0")
    elif solve_H0:
        mode = ClosureMode.SOLVE_H0
        if has_H0:
            raise ConfigError("exactly one closure mode: H0 is solved, remove the H0 key")
        if not has_phi0:
            raise ConfigError("solve_H0 needs phi0")
    else:
        mode = ClosureMode.CHECK
        if not (has_phi0 and has_H0):
            raise ConfigError("exactly one closure mode: give H0 and phi0, or set solve_phi0 / solve_H0")

    profile = values["profile"]
    if profile == "gaussian":
        matched = "N" in values or "rho0" in values
        if matched:
            if not ("N" in values and "rho0" in values):
                raise ConfigError("a matched gaussian needs both N and rho0")
            if "amplitude" in values or "width" in values:
                raise ConfigError("give either amplitude/width or N/rho0 for a gaussian, not both")
        elif not ("amplitude" in values and "width" in values):
            raise ConfigError("gaussian profile needs amplitude and width (or N and rho0)")
        if "radius" in values:
            raise ConfigError("radius belongs to the ball profile")
    elif profile == "ball":
        if not ("amplitude" in values and "radius" in values):
            raise ConfigError("ball profile needs amplitude and radius")
        if "width" in values or "N" in values or "rho0" in values:
            raise ConfigError("ball profile takes amplitude and radius only")
    elif profile == "zero":
        extra = [key for key in ("amplitude", "width", "radius", "N", "rho0") if key in values]
        if extra:
            raise ConfigError(f"zero profile takes no parameters, got {extra}")
    else:
        raise ConfigError(f"unknown profile {profile!r} (gaussian, ball or zero)")

    formats = tuple(x.strip() for x in values.get("formats", ",".join(FORMATS)).split(",") if x.strip())
    bad = [x for x in formats if x not in FORMATS]
    if bad or not formats:
        raise ConfigError(f"formats must be a subset of {FORMATS}, got {formats}")

    cfg = RunConfig(
        sigma=values["sigma"],
        k=k,
        profile=profile,
        amplitude=values.get("amplitude"),
        width=values.get("width"),
        radius=values.get("radius"),
        N=values.get("N"),
        rho0=values.get("rho0"),
        a0=values.get("a0", 1.0),
        H0=values.get("H0"),
        phi0=values.get("phi0"),
        mode=mode,
        n_cells=values.get("n_cells", 400),
        r_max=values.get("r_max"),
        eta=values.get("eta", 1e-3),
        dt_max=values.get("dt_max", 0.05),
        a_floor=values.get("a_floor"),
        H_ceiling=values.get("H_ceiling", 1e8),
        t_end=values.get("t_end", 1.0),
        regrid=values.get("regrid", True),
        out_dir=values.get("dir", "."),
        cadence=values.get("cadence", 0.05),
        formats=formats,
        source=text,
    )
    for name in ("a0", "eta", "dt_max", "H_ceiling", "cadence"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name} must be positive")
    if not cfg.t_end >= 0:
        raise ConfigError("t_end must be >= 0")
    if cfg.n_cells < 8:
        raise ConfigError("n_cells must be >= 8")
    try:
        cfg.model_params(sigma=cfg.sigma[0])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def build_initial(cfg: RunConfig, sigma: Optional[float] = None, phi0: Optional[float] = None):
    """Constrained (state, F0) and the ModelParams for one parameter point."""
    p = cfg.model_params(sigma)
    if phi0 is None and cfg.phi0 is not None:
        phi0 = cfg.scalar("phi0")
    if cfg.profile == "gaussian" and cfg.N is not None:
        if cfg.r_max is None:
            profile, grid = matched_gaussian(cfg.N, cfg.rho0, cfg.a0, cfg.n_cells)
        else:
            grid = build_grid(cfg.n_cells, cfg.r_max)
            profile = gaussian_with_moments(cfg.N, cfg.rho0, cfg.a0, grid)
    else:
        if cfg.profile == "gaussian":
            profile = Profile("gaussian", cfg.amplitude, cfg.width)
            r_max = cfg.r_max if cfg.r_max is not None else CUTOFF_WIDTHS * cfg.width
        elif cfg.profile == "ball":
            profile = Profile("ball", cfg.amplitude, cfg.radius)
            r_max = cfg.r_max if cfg.r_max is not None else 2.0 * cfg.radius
        else:
            profile = Profile("zero")
            r_max = cfg.r_max if cfg.r_max is not None else 1.0
        grid = build_grid(cfg.n_cells, r_max)
    check_cutoff(profile, grid)
    F0 = sample_profile(profile, grid)
    H0 = cfg.H0
    if cfg.mode is ClosureMode.SOLVE_PHI0:
        phi0 = None
    return initial_data(F0, cfg.a0, H0, phi0, p, cfg.mode), p


def check_writable(path: str) -> None:
    """Create ``path`` if needed and make sure files can be written there."""
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {path}: {exc}") from None
    if not os.access(path, os.W_OK | os.X_OK):
        raise ConfigError(f"output directory {path} is not writable")


def sweep_points(cfg: RunConfig):
    """(phi0, sigma) pairs in lexicographic order."""
    if cfg.mode is not ClosureMode.SOLVE_H0:
        raise ConfigError("sweeps solve H0 from each phi0: set solve_H0 = true and give phi0")
    return [(phi0, sigma) for phi0 in sorted(set(cfg.phi0)) for sigma in sorted(set(cfg.sigma))]


__all__ = [
    "ConfigError",
    "RunConfig",
    "build_initial",
    "check_writable",
    "load_config",
    "parse_config",
    "parse_values",
    "sweep_points",
]
