import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gpam_laplace.spectral import (
    FOUR_PI2,
    ExplodedFieldError,
    Mollifier,
    TorusGrid,
    apply_multiplier,
    dealias,
    flat_top_cutoff,
    forward_transform,
    green_convolve,
    green_multiplier,
    heat_step,
    inverse_transform,
    laplacian,
    mollify,
)

from conftest import cos_mode

GRID = TorusGrid(16)
seeds = st.integers(0, 2**32 - 1)


def rand_field(seed, grid=GRID):
    return np.random.default_rng(seed).standard_normal(grid.shape)


def test_grid_basics():
    g = TorusGrid(8)
    assert g.spacing * g.n == 1.0
    k1, _ = g.wavenumbers
    assert sorted(set(k1.ravel())) == list(range(-4, 4))
    with pytest.raises(ValueError):
        TorusGrid(7)
    with pytest.raises(ValueError):
        g.check(np.zeros((4, 4)))


def test_forward_constant_and_cosine():
    c = forward_transform(np.full(GRID.shape, 2.5), GRID)
    assert c[0, 0] == pytest.approx(2.5)
    c[0, 0] = 0
    assert np.abs(c).max() < 1e-14
    c = forward_transform(cos_mode(GRID), GRID)
    assert c[1, 0] == pytest.approx(0.5) and c[-1, 0] == pytest.approx(0.5)
    c[1, 0] = c[-1, 0] = 0
    assert np.abs(c).max() < 1e-14


@given(seeds)
def test_round_trip_and_hermitian(seed):
    f = rand_field(seed)
    c = forward_transform(f, GRID)
    flip = np.roll(np.flip(c), 1, axis=(0, 1))
    assert np.array_equal(c, np.conj(flip))
    assert np.abs(inverse_transform(c, GRID) - f).max() <= 1e-12 * np.abs(f).max()


def test_non_finite_input_flags_explosion():
    f = np.zeros(GRID.shape)
    f[3, 4] = np.nan
    with pytest.raises(ExplodedFieldError):
        forward_transform(f, GRID)


def test_heat_step_examples():
    const = np.full(GRID.shape, 3.0)
    assert np.allclose(heat_step(const, 0.7, GRID), const, atol=1e-14)
    f = cos_mode(GRID)
    assert np.allclose(heat_step(f, 0.1, GRID), np.exp(-0.4 * np.pi**2) * f, atol=1e-14)
    r = rand_field(1)
    assert np.array_equal(heat_step(r, 0.0, GRID), r)
    with pytest.raises(ValueError):
        heat_step(r, -1.0, GRID)


@given(seeds, st.floats(0, 0.05), st.floats(0, 0.05))
def test_heat_semigroup(seed, s, t):
    f = rand_field(seed)
    lhs = heat_step(heat_step(f, s, GRID), t, GRID)
    assert np.abs(lhs - heat_step(f, s + t, GRID)).max() <= 1e-12 * (1 + np.abs(f).max())


def test_green_examples():
    assert np.abs(green_convolve(np.ones(GRID.shape), GRID)).max() < 1e-15
    f = cos_mode(GRID)
    assert np.allclose(green_convolve(f, GRID), f / FOUR_PI2, atol=1e-15)
    m = green_multiplier(GRID)
    assert m[0, 0] == 0 and np.all(m >= 0)


@given(seeds)
def test_green_symmetric_and_inverts_laplacian(seed):
    rng = np.random.default_rng(seed)
    f, g = rng.standard_normal((2,) + GRID.shape)
    a = GRID.inner(green_convolve(f, GRID), g)
    b = GRID.inner(f, green_convolve(g, GRID))
    assert abs(a - b) <= 1e-12 * (abs(a) + 1e-300) + 1e-15
    back = -laplacian(green_convolve(f, GRID), GRID)
    assert np.abs(back - (f - f.mean())).max() <= 1e-10


def test_flat_top_profile():
    r = np.linspace(0, 2, 401)
    chi = flat_top_cutoff(r)
    assert np.all(chi[r <= 0.5] == 1.0) and np.all(chi[r >= 1.0] == 0.0)
    assert np.all(np.diff(chi) <= 0)
    assert np.array_equal(flat_top_cutoff(-r), chi)


def test_mollifier_examples():
    f = rand_field(3)
    # delta small enough that chi = 1 on every resolved mode: identity
    grid = TorusGrid(16)
    tiny = Mollifier(2 * grid.spacing)
    mult = tiny.multiplier(grid)
    assert mult[0, 0] == 1.0
    const = np.full(grid.shape, 1.7)
    assert np.allclose(mollify(const, Mollifier(0.25), grid), const, atol=1e-14)
    m = Mollifier(0.25)
    twice = mollify(mollify(f, m, grid), m, grid)
    once = apply_multiplier(f, m.multiplier(grid) ** 2, grid.n)
    assert np.abs(twice - once).max() < 1e-13
    assert mollify(f, m, grid).mean() == pytest.approx(f.mean(), abs=1e-14)
    with pytest.raises(ValueError):
        mollify(f, Mollifier(grid.spacing), grid)


def test_identity_mollifier_on_low_modes():
    # modes with delta |k| <= 1/2 are untouched
    grid = TorusGrid(32)
    m = Mollifier(1 / 16)
    f = cos_mode(grid, 3, 4)  # |k| = 5, delta |k| = 5/16
    assert np.abs(mollify(f, m, grid) - f).max() < 1e-14


@given(seeds)
def test_real_output(seed):
    f = rand_field(seed)
    for out in (heat_step(f, 0.01, GRID), green_convolve(f, GRID), dealias(f, GRID), mollify(f, Mollifier(0.25), GRID)):
        assert out.dtype == np.float64 and np.all(np.isfinite(out))
    c = forward_transform(f, GRID) * np.exp(-0.01 * FOUR_PI2 * GRID.ksq)
    assert np.abs(np.fft.ifft2(c).imag).max() <= 1e-12 * np.abs(f).max()


def test_dealias_projection():
    f = rand_field(5)
    d = dealias(f, GRID)
    assert np.abs(dealias(d, GRID) - d).max() < 1e-14
    # |k| = 6 > 16/3 is removed
    assert np.abs(dealias(cos_mode(GRID, 6, 0), GRID)).max() < 1e-14
    assert np.abs(dealias(cos_mode(GRID, 5, 0), GRID) - cos_mode(GRID, 5, 0)).max() < 1e-14
