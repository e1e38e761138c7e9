import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gpam_laplace.noise import (
    KAPPA,
    NoiseRealization,
    dyadic_scales,
    hash64,
    model_norm_approx,
    pair,
    renorm_constant,
    sample_noise_fields,
    sample_seeds,
    sample_white_noise,
    second_order_object,
)
from gpam_laplace.spectral import Mollifier, TorusGrid, apply_multiplier, green_multiplier

from conftest import cos_mode

GRID = TorusGrid(16)
MOLL = Mollifier(0.25)


def test_hash64_is_deterministic_and_spreads():
    assert hash64(7, 3) == hash64(7, 3)
    seeds = sample_seeds(7, 1000)
    assert len(set(seeds)) == 1000
    assert all(0 <= s < 2**64 for s in seeds)
    assert sample_seeds(7, 5, start=10) == seeds[10:15]
    assert hash64(7, 0) != hash64(8, 0)


def test_sampling_is_deterministic():
    a = sample_white_noise(GRID, 42)
    b = sample_white_noise(GRID, 42)
    assert np.array_equal(a.coeffs, b.coeffs)
    assert not np.array_equal(a.coeffs, sample_white_noise(GRID, 43).coeffs)


def test_realization_symmetry():
    xi = sample_white_noise(GRID, 5)
    c = xi.coeffs
    flip = np.roll(np.flip(c), 1, axis=(0, 1))
    assert np.allclose(c, np.conj(flip), atol=1e-14)
    assert abs(c[0, 0].imag) < 1e-15
    # grid values and batch sampler agree
    assert np.allclose(sample_noise_fields(GRID, [5])[0], xi.values, atol=1e-12)
    assert np.allclose(xi.scaled(0.5).values, 0.5 * xi.values, atol=1e-14)


def test_coefficient_variance_monte_carlo():
    seeds = sample_seeds(2024, 10_000)
    z = sample_noise_fields(GRID, seeds)
    e = np.sqrt(2) * cos_mode(GRID)  # real unit vector along k = (1, 0)
    x = GRID.inner(z, e)
    var, se = np.mean(x**2), np.std(x**2, ddof=1) / np.sqrt(x.size)
    assert abs(var - 1.0) <= 3 * se


def test_pair_examples():
    xi = sample_white_noise(GRID, 9)
    assert pair(xi, np.zeros(GRID.shape), GRID) == 0.0
    e = np.sqrt(2) * cos_mode(GRID, 2, 1)
    expected = np.sqrt(2) * xi.coeffs[2, 1].real
    assert pair(xi, e, GRID) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(ValueError):
        pair(xi, np.zeros((8, 8)), GRID)
    with pytest.raises(ValueError):
        pair(sample_white_noise(TorusGrid(8), 1), np.zeros((8, 8)), GRID)


@given(st.integers(0, 10**6))
def test_pair_linear(seed):
    rng = np.random.default_rng(seed)
    f, g = rng.standard_normal((2,) + GRID.shape)
    xi = sample_white_noise(GRID, seed)
    assert pair(xi, f + g, GRID) == pytest.approx(pair(xi, f, GRID) + pair(xi, g, GRID), rel=1e-12, abs=1e-12)


def test_gaussian_isometry():
    rng = np.random.default_rng(0)
    f, g = rng.standard_normal((2,) + GRID.shape)
    z = sample_noise_fields(GRID, sample_seeds(11, 10_000))
    p = {"f": (f, pair(z, f, GRID)), "g": (g, pair(z, g, GRID))}
    for a, b in (("f", "f"), ("f", "g"), ("g", "g")):
        prod = p[a][1] * p[b][1]
        se = prod.std(ddof=1) / np.sqrt(prod.size)
        assert abs(prod.mean() - GRID.inner(p[a][0], p[b][0])) <= 3 * se


def test_renorm_constant_examples():
    grid = TorusGrid(64)
    # only k = 0 survives: flat-top support ends at delta |k| = 1
    c = renorm_constant(grid, Mollifier(1.01))
    assert c.value == 0.0
    vals = [renorm_constant(grid, Mollifier(d)).value for d in (0.25, 0.125, 0.0625)]
    assert vals[0] < vals[1] < vals[2]
    with pytest.raises(ValueError):
        renorm_constant(grid, Mollifier(grid.spacing))


def test_renorm_constant_mode_sum():
    grid = TorusGrid(32)
    m = Mollifier(0.125)
    k1, k2 = np.meshgrid(np.arange(-16, 16), np.arange(-16, 16), indexing="ij")
    r = np.hypot(k1, k2)
    from gpam_laplace.spectral import flat_top_cutoff

    nz = r > 0
    oracle = np.sum(flat_top_cutoff(0.125 * r[nz]) ** 2 / (4 * np.pi**2 * r[nz] ** 2))
    assert renorm_constant(grid, m).value == pytest.approx(oracle, rel=1e-13)


def test_second_order_object_smooth_driver():
    grid = TorusGrid(32)
    m = Mollifier(0.125)
    h = cos_mode(grid, 1, 0) + 0.5 * cos_mode(grid, 0, 2)
    obj = second_order_object(h, grid, m, 0.0)
    hd = apply_multiplier(h, m.multiplier(grid), grid.n)
    kh = apply_multiplier(hd, green_multiplier(grid), grid.n)
    assert np.abs(obj.values - kh * hd).max() < 1e-13


def test_second_order_object_scaling():
    grid = TorusGrid(16)
    xi = sample_white_noise(grid, 3)
    c = renorm_constant(grid, MOLL).value
    eps = 0.3
    a = second_order_object(xi, grid, MOLL, c, eps=eps)
    b = second_order_object(xi, grid, MOLL, c)
    assert np.allclose(a.values + eps**2 * c, eps**2 * (b.values + c), atol=1e-13)
    # recentring at a node removes K xi_d(z) xi_d
    r = b.recentred((2, 3))
    assert np.allclose(r, b.values - b.k_xi[2, 3] * b.xi_delta)


def test_wick_mean_vanishes():
    grid = TorusGrid(16)
    c = renorm_constant(grid, MOLL).value
    z = sample_noise_fields(grid, sample_seeds(99, 10_000))
    vals = second_order_object(z, grid, MOLL, c).values
    x = vals.mean(axis=(-2, -1))
    assert abs(x.mean()) <= 3 * x.std(ddof=1) / np.sqrt(x.size)


def test_model_norm_examples():
    grid = TorusGrid(32)
    m = Mollifier(0.125)
    c = renorm_constant(grid, m).value
    zero = model_norm_approx(np.zeros(grid.shape), grid, m, 0.0)
    assert zero.combined == 0.0
    xi = sample_noise_fields(grid, sample_seeds(1, 4))
    base = model_norm_approx(xi, grid, m, c)
    for eps in (0.5, 0.1, 0.013):
        scaled = model_norm_approx(xi, grid, m, c, eps=eps)
        assert np.allclose(scaled.combined, eps * base.combined, rtol=1e-12)
    fewer = model_norm_approx(xi, grid, m, c, scales=2)
    assert np.all(fewer.combined <= base.combined)
    assert np.all(base.combined >= 0)
    assert KAPPA == 0.05


def test_dyadic_scales_resolution():
    assert dyadic_scales(TorusGrid(32), 3) == (0.5, 0.25, 0.125)
    with pytest.raises(ValueError):
        dyadic_scales(TorusGrid(16), 3)


def test_realization_grid_mismatch():
    xi = NoiseRealization(TorusGrid(8), np.zeros((8, 8), complex), 0)
    with pytest.raises(ValueError):
        second_order_object(xi, GRID, MOLL, 0.0)
