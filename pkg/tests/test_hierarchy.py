from dataclasses import replace

import numpy as np
import pytest

from gpam_laplace.hierarchy import (
    build_hierarchy,
    coefficient_fields,
    deterministic_hierarchy,
    march_series,
    remainder,
)
from gpam_laplace.noise import model_norm_approx, sample_noise_fields, sample_seeds, sample_white_noise
from gpam_laplace.nonlinearity import get_nonlinearity
from gpam_laplace.solvers import make_context, solve_driven, solve_linearized, solve_skeleton

from conftest import cos_mode


@pytest.fixture(scope="module")
def setup(small_ctx):
    h = 0.5 * cos_mode(small_ctx.grid)
    xi = sample_white_noise(small_ctx.grid, 17).values
    return small_ctx, h, xi


def test_coefficient_fields_low_orders():
    rng = np.random.default_rng(0)
    gd = list(rng.standard_normal((4, 5)))
    u1 = rng.standard_normal(5)
    a, c, b = coefficient_fields(1, gd, [])
    assert np.array_equal(a, gd[0]) and not np.any(c) and not np.any(b)
    a, c, b = coefficient_fields(2, gd, [u1])
    assert np.allclose(a, 2 * gd[1] * u1)
    assert np.allclose(c, 2 * gd[1] * gd[0])
    assert np.allclose(b, gd[2] * u1**2)
    with pytest.raises(ValueError):
        coefficient_fields(3, gd, [u1])
    with pytest.raises(ValueError):
        coefficient_fields(0, gd, [])


def test_coefficient_fields_constant_g():
    gd = [np.ones(4)] + [np.zeros(4)] * 4
    lower = [np.arange(4.0)] * 3
    for m in range(2, 5):
        a, c, b = coefficient_fields(m, gd, lower[: m - 1])
        assert not np.any(a) and not np.any(c) and not np.any(b)


def test_first_term_is_linearized_solve(setup):
    ctx, h, xi = setup
    hier = build_hierarchy(ctx, h, xi, 1)
    v = solve_linearized(ctx, hier.skeleton, h, ctx.mollify(xi))
    assert np.abs(hier.term(1).values - v.values).max() < 1e-14
    assert np.all(hier.term(1).values[0] == 0)


def test_gaussian_case_terms(setup):
    ctx, h, xi = setup
    ctx1 = replace(ctx, g=get_nonlinearity("one"))
    hier = build_hierarchy(ctx1, h, xi, 3)
    Z = solve_driven(replace(ctx1, u0=np.zeros(ctx1.grid.shape)), ctx1.mollify(xi))
    assert np.abs(hier.term(1).values - Z.values).max() < 1e-13
    assert not np.any(hier.term(2).values) and not np.any(hier.term(3).values)


def test_series_route_matches_per_term_route(setup):
    ctx, h, xi = setup
    hier = build_hierarchy(ctx, h, xi, 4)
    series = march_series(ctx, hier.skeleton, h, ctx.mollify(xi), ctx.c_delta, 4, save=True)
    for m in range(1, 5):
        ref = hier.term(m).values
        assert np.abs(series[:, m - 1, 0] - ref).max() <= 1e-10 * (1 + np.abs(ref).max())


@pytest.mark.parametrize("eps", [0.5, 0.1, 0.03])
def test_exact_homogeneity(setup, eps):
    ctx, h, xi = setup
    w = solve_skeleton(ctx, h)
    d = ctx.mollify(xi)
    base = march_series(ctx, w, h, d, ctx.c_delta, 4)
    scaled = march_series(ctx, w, h, eps * d, eps**2 * ctx.c_delta, 4)
    for m in range(4):
        ref = eps ** (m + 1) * base[m]
        assert np.abs(scaled[m] - ref).max() <= 1e-10 * np.abs(ref).max()


def test_first_order_linear_and_unrenormalised(setup):
    ctx, h, xi = setup
    w = solve_skeleton(ctx, h)
    rng = np.random.default_rng(3)
    a, b = rng.standard_normal((2,) + ctx.grid.shape)
    t = march_series(ctx, w, h, np.stack([a, b, a + b]), ctx.c_delta, 1)[0]
    assert np.abs(t[2] - t[0] - t[1]).max() < 1e-12 * np.abs(t).max()
    other_c = march_series(ctx, w, h, a, 5.0, 1)[0, 0]
    assert np.array_equal(other_c, t[0])


def test_deterministic_hierarchy(setup):
    ctx, h, _ = setup
    zero = deterministic_hierarchy(ctx, h, np.zeros(ctx.grid.shape), 3)
    assert all(not np.any(t.values) for t in zero.terms)
    k = cos_mode(ctx.grid, 0, 1)
    hier = deterministic_hierarchy(ctx, h, k, 3)
    v = solve_linearized(ctx, hier.skeleton, h, k)
    assert np.abs(hier.term(1).values - v.values).max() < 1e-12
    hier2 = deterministic_hierarchy(ctx, h, 2 * k, 3, hier.skeleton)
    for m in range(1, 4):
        assert np.allclose(hier2.term(m).values, 2**m * hier.term(m).values, rtol=1e-12, atol=1e-15)


def test_remainder_trivial_cases(setup):
    ctx, h, xi = setup
    R, norm, bad = remainder(ctx, h, 0.0, xi, 2)
    assert norm == 0.0 and not bad
    ctx1 = replace(ctx, g=get_nonlinearity("one"))
    R, norm, bad = remainder(ctx1, h, 0.3, xi, 1)
    assert norm < 1e-12
    with pytest.raises(ValueError):
        remainder(ctx, h, 0.1, xi, 0)


@pytest.mark.parametrize("M", [1, 2])
def test_remainder_order_small_grid(setup, M):
    ctx, h, xi = setup
    hier = build_hierarchy(ctx, h, xi, M)
    eps = [0.4, 0.2, 0.1, 0.05]
    norms = [remainder(ctx, h, e, xi, M, hier)[1] for e in eps]
    slope = np.polyfit(np.log(eps), np.log(norms), 1)[0]
    assert slope >= M - 0.3


def test_growth_bound_constants_stable():
    ctx = make_context(n=16, T=0.05, dt=0.05 / 32, g="cos", u0=np.full((16, 16), 0.3))
    h = 0.5 * cos_mode(ctx.grid)
    w = solve_skeleton(ctx, h)
    z = sample_noise_fields(ctx.grid, sample_seeds(5, 1000))
    terms = march_series(ctx, w, h, ctx.mollify(z), ctx.c_delta, 3, save=True)
    sup = np.abs(terms).max(axis=(0, -2, -1))  # (M, S)
    nrm = model_norm_approx(z, ctx.grid, ctx.mollifier, ctx.c_delta, scales=2).combined
    for m in range(3):
        ratio = sup[m] / (1 + nrm) ** (m + 1)
        half, full = ratio[:500].max(), ratio.max()
        assert np.isfinite(full) and full <= 2.0 * half
