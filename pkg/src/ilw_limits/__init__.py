"""Simulation and verification suite for the ILW equation family on the torus.

    d_t u - G_delta d_x^2 u = d_x(u^k)

with its deep-water (Benjamin-Ono) and shallow-water (KdV) limits.
"""

__version__ = "0.1.0"

from .evolution import SolverConfig, Trajectory, advisory_dt, evolve, integrate, invariant_i2
from .experiments import (
    ConvergenceReport,
    DataProfile,
    Perturbation,
    SweepConfig,
    deep_water_sweep,
    run_sweep,
    shallow_water_sweep,
    truncated_shallow_sweep,
    varying_data_sweep,
)
from .grid import Grid, SpectralField, from_function, sobolev_norm, to_physical, to_spectral
from .resonance import BoundReport, ComparisonConstants, check_res1, check_res2, omega
from .symbols import DepthParam, EquationSpec, build_symbol_table, h_closed, h_series, k_delta, l_delta, q_delta

__all__ = [
    "__version__",
    "BoundReport",
    "ComparisonConstants",
    "ConvergenceReport",
    "DataProfile",
    "DepthParam",
    "EquationSpec",
    "Grid",
    "Perturbation",
    "SolverConfig",
    "SpectralField",
    "SweepConfig",
    "Trajectory",
    "advisory_dt",
    "build_symbol_table",
    "check_res1",
    "check_res2",
    "deep_water_sweep",
    "evolve",
    "from_function",
    "h_closed",
    "h_series",
    "integrate",
    "invariant_i2",
    "k_delta",
    "l_delta",
    "omega",
    "q_delta",
    "run_sweep",
    "shallow_water_sweep",
    "sobolev_norm",
    "to_physical",
    "to_spectral",
    "truncated_shallow_sweep",
    "varying_data_sweep",
]
