"""Exact solutions, error norms, convergence orders and invariant residuals."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .sav_core import DiagnosticsRecord
from .spectral_grid import Grid

__all__ = [
    "ExactSolution",
    "ConvergenceReport",
    "soliton_1d",
    "plane_wave",
    "error_norms",
    "convergence_order",
    "invariant_residuals",
    "relative_residual",
]


def soliton_1d(x, t):
    """Bright soliton ``exp(i(2x - 3t)) sech(x - 4t)`` of ``i u_t + u_xx + 2|u|^2 u = 0``."""
    x = np.asarray(x, dtype=float)
    return np.exp(1j * (2.0 * x - 3.0 * t)) / np.cosh(x - 4.0 * t)


def plane_wave(point, t, amplitude=1.0, wavevector=(1.0, 1.0), b=-1.0, alpha=1.0):
    """``A exp(i(k.x - w t))`` with ``w = alpha |k|^2 - b |A|^2``.

    ``point`` is a sequence of coordinate arrays, one per dimension.
    """
    k = np.asarray(wavevector, dtype=float)
    omega = alpha * float(k @ k) - b * abs(amplitude) ** 2
    phase = sum(kw * np.asarray(xw, dtype=float) for kw, xw in zip(k, point))
    return amplitude * np.exp(1j * (phase - omega * t))


@dataclass(frozen=True)
class ExactSolution:
    kind: str
    amplitude: float = 1.0
    wavevector: tuple[float, ...] = (1.0, 1.0)
    b: float = -1.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in ("soliton1d", "plane_wave"):
            raise ValueError(f"unknown exact solution {self.kind!r}")
        if self.kind == "soliton1d" and (self.alpha != 1.0 or self.b != 2.0):
            raise ValueError("the soliton solves the alpha=1, b=2 equation only")

    @property
    def omega(self) -> float:
        if self.kind == "soliton1d":
            return 3.0
        k = np.asarray(self.wavevector, dtype=float)
        return self.alpha * float(k @ k) - self.b * abs(self.amplitude) ** 2

    def __call__(self, point, t):
        if self.kind == "soliton1d":
            return soliton_1d(point[0], t)
        return plane_wave(point, t, self.amplitude, self.wavevector, self.b, self.alpha)

    def sample(self, grid: Grid, t: float) -> np.ndarray:
        return np.asarray(self(grid.mesh(), t), dtype=complex)


def error_norms(numeric: np.ndarray, exact: np.ndarray, grid: Grid) -> tuple[float, float]:
    """Grid-weighted L2 and maximum norms of ``numeric - exact``."""
    if np.shape(numeric) != np.shape(exact) or np.size(numeric) != grid.size:
        raise ValueError("fields do not match the grid")
    diff = np.asarray(numeric) - np.asarray(exact)
    return float(np.sqrt(grid.cell_volume) * np.linalg.norm(diff)), float(np.max(np.abs(diff)))


def convergence_order(errors: Sequence[float], taus: Sequence[float]) -> np.ndarray:
    """Pairwise observed orders ``log(e_k/e_{k+1}) / log(tau_k/tau_{k+1})``."""
    e = np.asarray(errors, dtype=float)
    h = np.asarray(taus, dtype=float)
    if e.shape != h.shape or e.ndim != 1 or len(e) < 2:
        raise ValueError("need matching 1D sequences of at least two errors and taus")
    if np.any(np.diff(h) >= 0):
        raise ValueError("taus must be strictly decreasing")
    if np.any(e <= 0):
        raise ValueError("errors must be positive")
    return np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])


@dataclass
class ConvergenceReport:
    taus: list[float]
    l2_errors: list[float]
    linf_errors: list[float]
    l2_orders: list[float] = field(default_factory=list)
    linf_orders: list[float] = field(default_factory=list)

    def __post_init__(self):
        if len(self.taus) > 1 and not self.l2_orders:
            self.l2_orders = list(convergence_order(self.l2_errors, self.taus))
            self.linf_orders = list(convergence_order(self.linf_errors, self.taus))

    def rows(self):
        """``(tau, l2, l2_order, linf, linf_order)`` with NaN orders on the first row."""
        l2o = [float("nan"), *self.l2_orders]
        lio = [float("nan"), *self.linf_orders]
        return list(zip(self.taus, self.l2_errors, l2o, self.linf_errors, lio))


def relative_residual(q, q0) -> np.ndarray:
    return np.abs(np.asarray(q, dtype=float) - q0) / max(1.0, abs(q0))


def invariant_residuals(records: Sequence[DiagnosticsRecord]) -> dict[str, np.ndarray]:
    """Relative drift of mass and both energies against the first record."""
    if not records:
        raise ValueError("empty trajectory")
    r0 = records[0]
    return {
        "t": np.array([r.t for r in records]),
        "mass": relative_residual([r.mass for r in records], r0.mass),
        "hamiltonian": relative_residual([r.hamiltonian_energy for r in records], r0.hamiltonian_energy),
        "modified": relative_residual([r.modified_energy for r in records], r0.modified_energy),
    }
