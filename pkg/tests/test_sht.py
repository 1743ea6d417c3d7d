import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import sph_harm_y

from pureshape.errors import ResolutionExceeded
from pureshape.sht import SphereGrid


def _ylm_on_grid(grid, l, m):
    """Real part of scipy's Y_lm at the grid nodes (polar axis n1)."""
    th, ph = np.meshgrid(grid.theta, grid.phi, indexing="ij")
    return np.real(sph_harm_y(l, m, th, ph))


def _random_coef(grid, rng, lmax):
    c = np.zeros((grid.lmax + 1, grid.lmax + 1), dtype=complex)
    for m in range(lmax + 1):
        c[m, m : lmax + 1] = rng.normal(size=lmax + 1 - m) + 1j * rng.normal(size=lmax + 1 - m)
    c[0] = c[0].real
    return c


def test_weights_integrate_area():
    g = SphereGrid(12, 24)
    assert g.integrate(np.ones(g.shape)) == pytest.approx(4 * np.pi * g.radius**2)


@given(st.integers(4, 20), st.integers(0, 10_000))
def test_round_trip(n_theta, seed):
    g = SphereGrid(n_theta, 2 * n_theta)
    c = _random_coef(g, np.random.default_rng(seed), g.lmax)
    assert np.allclose(g.analyze(g.synthesize(c)), c, atol=1e-11)


def test_matches_scipy_harmonics():
    g = SphereGrid(16, 32)
    for l, m in [(0, 0), (3, 1), (7, 5), (15, 15)]:
        c = np.zeros((g.lmax + 1, g.lmax + 1), dtype=complex)
        c[m, l] = 0.5 if m else 1.0  # real field Re(Y_lm) folds the m > 0 coefficient twice
        assert np.allclose(g.synthesize(c), _ylm_on_grid(g, l, m), atol=1e-13)


def test_stacked_transforms_match_single():
    g = SphereGrid(10, 20)
    rng = np.random.default_rng(1)
    f = rng.normal(size=(3,) + g.shape)
    stacked = g.analyze(f)
    for k in range(3):
        assert np.allclose(stacked[k], g.analyze(f[k]))


def test_point_evaluation_and_gradient(rng):
    g = SphereGrid(24, 48)
    c = _random_coef(g, rng, 8)
    field = g.synthesize(c)
    j, k = 5, 11
    assert g.interpolate(c, g.nodes[j, k]) == pytest.approx(field[j, k], abs=1e-12)
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    grad = g.point(n).gradient(c)
    assert abs(grad @ n) < 1e-12
    t = np.cross(n, [0.3, -0.2, 0.9])
    t /= np.linalg.norm(t)
    h = 1e-6
    fd = (g.interpolate(c, n + h * t) - g.interpolate(c, n - h * t)) / (2 * h)
    assert fd == pytest.approx(grad @ t, rel=1e-6, abs=1e-8)


def test_gradient_at_chart_pole():
    g = SphereGrid(16, 32)
    c = np.zeros((g.lmax + 1, g.lmax + 1), dtype=complex)
    c[1, 1] = 1.0
    grad = g.point([1.0, 0.0, 0.0]).gradient(c)
    assert np.all(np.isfinite(grad))
    assert abs(grad[0]) < 1e-14


def test_band_checks():
    g = SphereGrid(8, 16)
    with pytest.raises(ResolutionExceeded):
        g.check_band(g.lmax + 1)
    c = _random_coef(g, np.random.default_rng(0), g.lmax)
    assert np.all(g.band_limited(c, 3)[:, 4:] == 0)


def test_laplacian_eigenvalues_small_grid():
    g = SphereGrid(12, 24)
    for l in range(g.lmax + 1):
        for m in range(l + 1):
            y = _ylm_on_grid(g, l, m)
            assert np.allclose(g.laplacian(y), -l * (l + 1) / g.radius**2 * y, atol=1e-10)
