"""Multiband Bose-Hubbard and single-mode variational models.

Energies are in recoil units E_R, times in hbar/E_R, and the interaction
coupling g in E_R/k with k = pi/a.
"""

from ._varbh import (
    BHParams,
    ConfigError,
    LatticeSetup,
    NumericalError,
    OutputError,
    __version__,
    band_energies,
    cached_parameters,
    find_peaks,
    format_double,
    gs_sweep,
    lattice_parameters,
    mbh_ground_energy,
    modulation_sweep,
    omega_grid,
    psi13_overlap,
    psi13_overlap_bound,
    tdv_ground_energy,
)

__all__ = [
    "BHParams",
    "ConfigError",
    "LatticeSetup",
    "NumericalError",
    "OutputError",
    "__version__",
    "band_energies",
    "cached_parameters",
    "find_peaks",
    "format_double",
    "gs_sweep",
    "lattice_parameters",
    "mbh_ground_energy",
    "modulation_sweep",
    "omega_grid",
    "psi13_overlap",
    "psi13_overlap_bound",
    "tdv_ground_energy",
]
