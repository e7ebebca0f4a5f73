"""Radial comparison models for Kähler and quaternion-Kähler geometry.

Spectra, heat kernels and exit statistics of the radial Laplacians of the
complex and quaternionic space forms, computed by eigen-expansion,
Crank-Nicolson evolution and Monte Carlo simulation.
"""

__version__ = "0.1.0"

from .errors import ConvergenceError, DomainError, SimulationError
from .model_geometry import (
    ModelFamily,
    ModelSpec,
    comparison_F,
    measure_density,
    measure_mass,
    model_spectrum,
    radial_drift,
    radial_law,
    small_ball_volume,
    total_mass,
)
from .sturm_liouville import cheng_lambda1, dirichlet_eigen, heat_kernel_spectral

__all__ = [
    "__version__",
    "ConvergenceError",
    "DomainError",
    "SimulationError",
    "ModelFamily",
    "ModelSpec",
    "comparison_F",
    "measure_density",
    "measure_mass",
    "model_spectrum",
    "radial_drift",
    "radial_law",
    "small_ball_volume",
    "total_mass",
    "cheng_lambda1",
    "dirichlet_eigen",
    "heat_kernel_spectral",
]
