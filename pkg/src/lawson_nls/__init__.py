"""Linearly implicit energy-preserving Lawson integrators for the cubic NLS."""

from .lawson import (
    SCHEMES,
    BootstrapError,
    LawsonIntegrator,
    StepFailure,
    bootstrap_step,
    extrapolation_coefficients,
    gauss_tableau,
    make_integrator,
    step,
)
from .sav_core import ModelParams, SavState, diagnostics
from .spectral_grid import Grid, build_grid, laplacian_symbol

__version__ = "0.1.0"
