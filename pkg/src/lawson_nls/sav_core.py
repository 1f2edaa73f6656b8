"""SAV state, the cubic nonlinearity kernel, and the monitored functionals.

The model is ``i phi_t + alpha * Lap(phi) + b |phi|^2 phi = 0`` with the
auxiliary scalar ``p = sqrt(<phi^2, phi^2>_h + C0)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral_grid import Grid, LaplacianSymbol, apply_laplacian, inner_product

__all__ = [
    "ModelParams",
    "SavState",
    "DiagnosticsRecord",
    "quartic_integral",
    "initial_auxiliary",
    "gamma_star",
    "modified_energy",
    "hamiltonian_energy",
    "discrete_mass",
    "diagnostics",
    "semi_discrete_rhs",
]


@dataclass(frozen=True)
class ModelParams:
    alpha: float = 1.0
    b: float = 1.0
    c0: float = 1.0

    def __post_init__(self):
        if self.alpha == 0 or not np.isfinite(self.alpha):
            raise ValueError("dispersion coefficient alpha must be finite and nonzero")
        if not np.isfinite(self.b):
            raise ValueError("nonlinearity b must be finite")
        if not (self.c0 >= 0):
            raise ValueError(f"C0 must be >= 0, got {self.c0}")


@dataclass
class SavState:
    phi: np.ndarray
    p: float
    t: float = 0.0


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    hamiltonian_energy: float
    modified_energy: float


def quartic_integral(phi: np.ndarray, grid: Grid) -> float:
    """``<phi^2, phi^2>_h``, the grid-weighted integral of ``|phi|^4``."""
    a2 = phi.real**2 + phi.imag**2
    return float(grid.cell_volume * np.dot(a2, a2))


def _radicand(phi: np.ndarray, c0: float, grid: Grid) -> float:
    r = quartic_integral(phi, grid) + c0
    if not r > 0:
        raise ValueError(
            f"nonpositive SAV radicand {r!r}; increase C0 (a zero field needs C0 > 0)"
        )
    return r


def initial_auxiliary(phi0: np.ndarray, c0: float, grid: Grid) -> float:
    """Consistent initial value of the auxiliary scalar."""
    return float(np.sqrt(_radicand(phi0, c0, grid)))


def gamma_star(phi_pred: np.ndarray, c0: float, grid: Grid) -> np.ndarray:
    """``i |phi|^2 phi / sqrt(<phi^2, phi^2>_h + C0)`` for a predicted stage."""
    scale = 1.0 / np.sqrt(_radicand(phi_pred, c0, grid))
    return 1j * scale * (phi_pred.real**2 + phi_pred.imag**2) * phi_pred


def _kinetic(phi: np.ndarray, sym: LaplacianSymbol) -> float:
    val = inner_product(apply_laplacian(phi, sym), phi, sym.grid)
    scale = max(1.0, abs(val.real))
    if abs(val.imag) > 1e-10 * scale:
        raise ArithmeticError(f"<L phi, phi>_h has imaginary part {val.imag:.3e}")
    return val.real


def modified_energy(state: SavState, params: ModelParams, sym: LaplacianSymbol) -> float:
    """Quadratic SAV energy ``alpha <L phi, phi> + b/2 p^2 - b/2 C0``."""
    kin = _kinetic(state.phi, sym)
    return params.alpha * kin + 0.5 * params.b * (state.p**2 - params.c0)


def hamiltonian_energy(phi: np.ndarray, params: ModelParams, sym: LaplacianSymbol) -> float:
    # The quartic term carries the cell volume, like every other grid integral.
    kin = _kinetic(phi, sym)
    return params.alpha * kin + 0.5 * params.b * quartic_integral(phi, sym.grid)


def discrete_mass(phi: np.ndarray, grid: Grid) -> float:
    return float(grid.cell_volume * np.vdot(phi, phi).real)


def diagnostics(state: SavState, params: ModelParams, sym: LaplacianSymbol) -> DiagnosticsRecord:
    return DiagnosticsRecord(
        t=state.t,
        mass=discrete_mass(state.phi, sym.grid),
        hamiltonian_energy=hamiltonian_energy(state.phi, params, sym),
        modified_energy=modified_energy(state, params, sym),
    )


def semi_discrete_rhs(
    state: SavState, params: ModelParams, sym: LaplacianSymbol
) -> tuple[np.ndarray, float]:
    """Exact semi-discrete SAV vector field ``(dphi/dt, dp/dt)``.

    Used as an independent reference by the test-suite; the time stepper
    never calls it.
    """
    grid = sym.grid
    g = gamma_star(state.phi, params.c0, grid)
    lphi = apply_laplacian(state.phi, sym)
    dphi = 1j * params.alpha * lphi + params.b * state.p * g
    dp = -2.0 * params.alpha * inner_product(lphi, g, grid).real
    return dphi, dp
