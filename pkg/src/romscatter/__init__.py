"""Data-driven reduced-order-model inversion for 1D Schrodinger scattering."""

from .forward import (BoundarySpectrum, PotentialModel, SpatialGrid, StateField, boundary_trace,
                      generate_spectrum, solve_bvp, solve_sensitivity, wavenumber_grid)
from .rom import RomSystem, assemble_direct, assemble_from_data, interpolate_data, rom_solve
from .states import (LanczosFactor, StateEstimate, born_estimate, da_estimate, lanczos_m_orthogonal,
                     lo_estimate)
from .inversion import LSKernel, PiecewiseConstantBasis, assemble_kernel, tikhonov_solve
from .experiments import (ExperimentConfig, add_noise, invert, monte_carlo, parameter_sweep,
                          relative_error, run_trial)

__version__ = "0.1.0"

__all__ = [
    "BoundarySpectrum", "PotentialModel", "SpatialGrid", "StateField", "boundary_trace",
    "generate_spectrum", "solve_bvp", "solve_sensitivity", "wavenumber_grid",
    "RomSystem", "assemble_direct", "assemble_from_data", "interpolate_data", "rom_solve",
    "LanczosFactor", "StateEstimate", "born_estimate", "da_estimate", "lanczos_m_orthogonal",
    "lo_estimate", "LSKernel", "PiecewiseConstantBasis", "assemble_kernel", "tikhonov_solve",
    "ExperimentConfig", "add_noise", "invert", "monte_carlo", "parameter_sweep", "relative_error",
    "run_trial",
]
