"""Periodic tensor-product grids and the Fourier-diagonalized Laplacian.

Fields are stored as flat complex arrays with the x index varying fastest,
i.e. the C-ordered flattening of an array of shape ``(Nz, Ny, Nx)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "Grid",
    "LaplacianSymbol",
    "build_grid",
    "inner_product",
    "norm",
    "laplacian_symbol",
    "apply_laplacian",
    "apply_exp_laplacian",
    "to_spectral",
    "from_spectral",
    "spectral_inner_product",
    "dense_d2_matrix",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on a box ``prod [a_w, b_w)``.

    Attributes
    ----------
    lower, upper : tuple of float
        Box bounds per dimension, ordered (x, y, z).
    counts : tuple of int
        Node counts per dimension, each even and at least 4.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    counts: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.lower, self.upper))

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(l / n for l, n in zip(self.lengths, self.counts))

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def shape(self) -> tuple[int, ...]:
        """Array shape whose C-order flattening is x-fastest."""
        return tuple(reversed(self.counts))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    @property
    def measure(self) -> float:
        return float(np.prod(self.lengths))

    def coordinates(self, axis: int) -> np.ndarray:
        """1D node coordinates ``a_w + j h_w`` along ``axis`` (0 = x)."""
        return self.lower[axis] + np.arange(self.counts[axis]) * self.spacings[axis]

    def mesh(self) -> list[np.ndarray]:
        """Flattened coordinate arrays ``[X, Y, ...]`` in field ordering."""
        axes = [self.coordinates(w) for w in reversed(range(self.dim))]
        grids = np.meshgrid(*axes, indexing="ij")
        return [g.ravel() for g in reversed(grids)]

    def reshape(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(u).reshape(self.shape)


def build_grid(
    dim: int,
    bounds: Sequence[float] | Sequence[Sequence[float]],
    counts: int | Sequence[int],
) -> Grid:
    """Build a periodic grid.

    ``bounds`` is either a single ``(a, b)`` pair reused for every dimension
    or one pair per dimension; ``counts`` likewise.
    """
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    bounds = list(bounds)
    if len(bounds) == 2 and np.isscalar(bounds[0]):
        pairs = [tuple(map(float, bounds))] * dim
    else:
        pairs = [tuple(map(float, b)) for b in bounds]
    if len(pairs) != dim or any(len(p) != 2 for p in pairs):
        raise ValueError(f"expected {dim} (lower, upper) pairs, got {bounds!r}")
    if np.isscalar(counts):
        ns = [int(counts)] * dim
    else:
        ns = [int(n) for n in counts]
    if len(ns) != dim:
        raise ValueError(f"expected {dim} node counts, got {counts!r}")
    for n in ns:
        if n < 4 or n % 2:
            raise ValueError(f"node counts must be even and >= 4, got {n}")
    for a, b in pairs:
        if not (np.isfinite(a) and np.isfinite(b)) or b <= a:
            raise ValueError(f"degenerate bounds ({a}, {b})")
    return Grid(
        lower=tuple(p[0] for p in pairs),
        upper=tuple(p[1] for p in pairs),
        counts=tuple(ns),
    )


def _check_size(u: np.ndarray, grid: Grid) -> None:
    if np.shape(u) != (grid.size,):
        raise ValueError(f"field of shape {np.shape(u)} does not match grid size {grid.size}")


def inner_product(u: np.ndarray, v: np.ndarray, grid: Grid) -> complex:
    """Discrete inner product ``prod(h) * sum(u * conj(v))``."""
    _check_size(u, grid)
    _check_size(v, grid)
    return complex(grid.cell_volume * np.vdot(v, u))


def norm(u: np.ndarray, grid: Grid) -> float:
    _check_size(u, grid)
    return float(np.sqrt(grid.cell_volume) * np.linalg.norm(u))


def _wavenumbers(n: int) -> np.ndarray:
    # 0, 1, ..., N/2, -N/2+1, ..., -1 (positive Nyquist, as in the Lambda_w diagonal)
    k = np.fft.fftfreq(n, d=1.0 / n)
    k[n // 2] = n // 2
    return k


@dataclass(frozen=True)
class LaplacianSymbol:
    """Eigenvalues of the spectral Laplacian in FFT (x-fastest) ordering."""

    grid: Grid
    eigenvalues: np.ndarray = field(repr=False)


def laplacian_symbol(grid: Grid) -> LaplacianSymbol:
    total = np.zeros(grid.shape)
    for w in range(grid.dim):
        mu = 2.0 * np.pi / grid.lengths[w]
        lam = -((mu * _wavenumbers(grid.counts[w])) ** 2)
        bshape = [1] * grid.dim
        bshape[grid.dim - 1 - w] = grid.counts[w]
        total = total + lam.reshape(bshape)
    eig = total.ravel()
    eig.setflags(write=False)
    return LaplacianSymbol(grid=grid, eigenvalues=eig)


def to_spectral(u: np.ndarray, grid: Grid) -> np.ndarray:
    """Unnormalized forward DFT, returned flat."""
    return np.fft.fftn(grid.reshape(u)).ravel()


def from_spectral(u_hat: np.ndarray, grid: Grid) -> np.ndarray:
    return np.fft.ifftn(grid.reshape(u_hat)).ravel()


def spectral_inner_product(u_hat: np.ndarray, v_hat: np.ndarray, grid: Grid) -> complex:
    """``inner_product`` evaluated on unnormalized DFT coefficients (Parseval)."""
    return complex(grid.cell_volume / grid.size * np.vdot(v_hat, u_hat))


def apply_laplacian(u: np.ndarray, sym: LaplacianSymbol) -> np.ndarray:
    grid = sym.grid
    _check_size(u, grid)
    return from_spectral(sym.eigenvalues * to_spectral(u, grid), grid)


def apply_exp_laplacian(
    u: np.ndarray, alpha: float, t: float, sym: LaplacianSymbol
) -> np.ndarray:
    """Apply ``exp(i alpha L_h t)`` by spectral multiplication."""
    grid = sym.grid
    _check_size(u, grid)
    if not (np.isfinite(alpha) and np.isfinite(t)):
        raise ValueError("alpha and t must be finite")
    phase = np.exp(1j * alpha * t * sym.eigenvalues)
    return from_spectral(phase * to_spectral(u, grid), grid)


def dense_d2_matrix(n: int, length: float) -> np.ndarray:
    """Dense Fourier second-derivative matrix on ``n`` equispaced nodes.

    Only for testing; applying it costs O(n^2).
    """
    if n < 4 or n % 2:
        raise ValueError(f"n must be even and >= 4, got {n}")
    mu = 2.0 * np.pi / length
    h = length / n
    j = np.arange(n)
    diff = (j[:, None] - j[None, :]) * h
    sign = (-1.0) ** (j[:, None] + j[None, :] + 1)
    with np.errstate(divide="ignore"):
        d2 = 0.5 * mu**2 * sign / np.sin(mu * diff / 2.0) ** 2
    np.fill_diagonal(d2, -(mu**2) * (n**2 + 2) / 12.0)
    return d2
