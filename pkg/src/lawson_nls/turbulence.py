"""Random-phase initial data for superfluid turbulence runs."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .spectral_grid import Grid

__all__ = ["RandomFieldSpec", "gaussian_covariance", "gaussian_random_field", "turbulence_initial_data"]


@dataclass(frozen=True)
class RandomFieldSpec:
    seed: int
    length_scale: float = 1.0


def gaussian_covariance(r2: np.ndarray, length_scale: float = 1.0) -> np.ndarray:
    return np.exp(-0.5 * r2 / length_scale**2)


def _periodic_r2(grid: Grid) -> np.ndarray:
    """Squared minimum-image distance of every node to the first node."""
    r2 = np.zeros(grid.size)
    for w, xs in enumerate(grid.mesh()):
        d = xs - grid.lower[w]
        L = grid.lengths[w]
        d = np.minimum(d, L - d)
        r2 += d**2
    return r2


def gaussian_random_field(spec: RandomFieldSpec, grid: Grid) -> np.ndarray:
    """Stationary mean-zero Gaussian field with covariance ``exp(-r^2 / 2 l^2)``.

    Sampled by diagonalizing the circulant covariance with the DFT: white
    noise is transformed, scaled by the square roots of the covariance
    eigenvalues and transformed back. The zero mode is dropped so the sample
    mean vanishes, and the result is rescaled to unit pointwise variance.
    """
    half = min(grid.lengths) / 2
    if gaussian_covariance(half**2, spec.length_scale) > 1e-8:
        warnings.warn(
            "domain half-width is comparable to the covariance length; "
            "the periodized covariance is distorted",
            stacklevel=2,
        )
    cov = gaussian_covariance(_periodic_r2(grid), spec.length_scale)
    eig = np.fft.fftn(grid.reshape(cov)).real
    eig = np.clip(eig, 0.0, None)
    eig.flat[0] = 0.0
    variance = eig.sum() / grid.size
    rng = np.random.default_rng(spec.seed)
    noise = rng.standard_normal(grid.shape)
    # FFT of real white noise: complex Gaussian modes with Hermitian symmetry
    modes = np.fft.fftn(noise) * np.sqrt(eig / variance)
    return np.fft.ifftn(modes).real.ravel()


def turbulence_initial_data(spec: RandomFieldSpec, grid: Grid) -> np.ndarray:
    """Uniform-density condensate ``exp(i psi)`` with a random phase ``psi``."""
    psi = gaussian_random_field(spec, grid)
    return np.exp(1j * psi)
