import numpy as np
import pytest

from lawson_nls.sav_core import discrete_mass
from lawson_nls.spectral_grid import build_grid
from lawson_nls.turbulence import RandomFieldSpec, gaussian_random_field, turbulence_initial_data


def test_deterministic():
    g = build_grid(2, (-10, 10), 64)
    a = gaussian_random_field(RandomFieldSpec(seed=11), g)
    b = gaussian_random_field(RandomFieldSpec(seed=11), g)
    c = gaussian_random_field(RandomFieldSpec(seed=12), g)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert a.dtype == float and np.all(np.isfinite(a))


def test_sample_mean():
    g = build_grid(2, (-10, 10), 256)
    psi = gaussian_random_field(RandomFieldSpec(seed=3), g)
    assert abs(psi.mean()) <= 5 / np.sqrt(g.size)


def test_lags_at_integer_distances():
    # spacing 1/4 puts r = 0, 1, 2 on grid lags; the wide box keeps the
    # zero-mode bias (2 pi / area) well below the standard error
    g = build_grid(2, (-16, 16), 128)
    k_per_unit = 4
    ests = {r: [] for r in (0, 1, 2)}
    for seed in range(200):
        psi = g.reshape(gaussian_random_field(RandomFieldSpec(seed=1000 + seed), g))
        for r in ests:
            k = r * k_per_unit
            ests[r].append(0.5 * (np.mean(psi * np.roll(psi, -k, 1)) + np.mean(psi * np.roll(psi, -k, 0))))
    for r, vals in ests.items():
        vals = np.asarray(vals)
        se = vals.std(ddof=1) / np.sqrt(len(vals))
        assert abs(vals.mean() - np.exp(-(r**2) / 2)) <= 3 * se


def test_small_domain_warns():
    g = build_grid(2, (-2, 2), 32)
    with pytest.warns(UserWarning):
        gaussian_random_field(RandomFieldSpec(seed=0), g)


def test_initial_data_unimodular():
    g = build_grid(2, (-10, 10), 64)
    phi = turbulence_initial_data(RandomFieldSpec(seed=5), g)
    assert np.max(np.abs(np.abs(phi) - 1)) <= 1e-15
    assert discrete_mass(phi, g) == pytest.approx(400.0, rel=1e-13)


def test_zero_phase_gives_unit_field(monkeypatch):
    import lawson_nls.turbulence as turb

    g = build_grid(2, (-10, 10), 16)
    monkeypatch.setattr(turb, "gaussian_random_field", lambda spec, grid: np.zeros(grid.size))
    assert np.all(turb.turbulence_initial_data(RandomFieldSpec(seed=0), g) == 1.0)


def test_three_dimensional():
    g = build_grid(3, (-10, 10), 16)
    phi = turbulence_initial_data(RandomFieldSpec(seed=1), g)
    assert phi.shape == (g.size,)
    assert np.max(np.abs(np.abs(phi) - 1)) <= 1e-15
