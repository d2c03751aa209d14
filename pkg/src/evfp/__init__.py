"""Simulation and classification of a homogeneous kinetic cosmology with momentum diffusion."""

from .dynamics import (
    ClosureMode,
    CosmoState,
    ModelParams,
    RunRecord,
    Termination,
    initial_data,
    rho_a3_budget,
    simulate,
    step,
)
from .fokker_planck import FPStepParams, fp_step, fp_step_cartesian_oracle
from .grid import RadialDistribution, RadialGrid, build_grid, sample_profile
from .moments import MomentSet, compute_moments, gamma_moment
from .regime import RegimeVerdict, blowup_threshold, classify, corollary_window, erfc

__all__ = [
    "ClosureMode",
    "CosmoState",
    "FPStepParams",
    "ModelParams",
    "MomentSet",
    "RadialDistribution",
    "RadialGrid",
    "RegimeVerdict",
    "RunRecord",
    "Termination",
    "blowup_threshold",
    "build_grid",
    "classify",
    "compute_moments",
    "corollary_window",
    "erfc",
    "fp_step",
    "fp_step_cartesian_oracle",
    "gamma_moment",
    "initial_data",
    "rho_a3_budget",
    "sample_profile",
    "simulate",
    "step",
]
