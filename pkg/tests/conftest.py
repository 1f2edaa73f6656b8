import numpy as np
import pytest

from lawson_nls.spectral_grid import build_grid, laplacian_symbol, to_spectral, from_spectral


def smooth_random_field(grid, rng, modes=4):
    """Random trigonometric polynomial with wavenumbers |k_w| <= modes."""
    u_hat = np.zeros(grid.shape, dtype=complex)
    idx = tuple(np.r_[0 : modes + 1, -modes:0] for _ in range(grid.dim))
    sub = np.ix_(*idx)
    u_hat[sub] = rng.standard_normal(u_hat[sub].shape) + 1j * rng.standard_normal(u_hat[sub].shape)
    return from_spectral(u_hat.ravel(), grid) * grid.size / u_hat[sub].size


@pytest.fixture
def rng():
    return np.random.default_rng(20231014)


@pytest.fixture(scope="session")
def soliton_grid():
    g = build_grid(1, (-40.0, 40.0), 1024)
    return g, laplacian_symbol(g)


@pytest.fixture(scope="session")
def plane_grid():
    g = build_grid(2, (0.0, 2 * np.pi), 32)
    return g, laplacian_symbol(g)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
