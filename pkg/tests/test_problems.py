import numpy as np
import pytest

from gpam_laplace.problems import cos_problem, gaussian_problem


@pytest.fixture(scope="module")
def oracle():
    return gaussian_problem(n=8, steps=8)[2]


def test_t_star_is_stationary(oracle):
    s2 = oracle.sigma**2
    t = oracle.t_star()
    assert abs(1 / (1 + (oracle.mu0 + t) ** 2) + t / s2) < 1e-12
    # the reduced objective at t_star beats nearby t
    f = lambda t: np.arctan(oracle.mu0 + t) + t * t / (2 * s2)
    assert oracle.value() <= min(f(t - 1e-3), f(t + 1e-3))


def test_a0_closed_form(oracle):
    s = oracle.mu0 + oracle.t_star()
    q = -2 * s / (1 + s * s) ** 2 * oracle.sigma**2
    assert oracle.coefficients(0)[0] == pytest.approx((1 + q) ** -0.5, rel=1e-12)


def test_quadrature_matches_expansion(oracle):
    a = oracle.coefficients(3)
    errs = []
    for eps in (0.1, 0.05, 0.025):
        errs.append(abs(oracle.J(eps) - np.polyval(a[::-1], eps)))
    slopes = np.diff(np.log(errs)) / np.log(0.5)
    assert np.all(slopes > 3.5)


def test_sigma_matches_grid_norm():
    ctx, _, oracle = gaussian_problem(n=16, steps=8)
    a = oracle.a_field(ctx.grid)
    assert ctx.grid.norm(a) == pytest.approx(oracle.sigma, rel=1e-14)


def test_cos_problem_shape():
    ctx, F = cos_problem(n=8, steps=4)
    assert ctx.grid.n == 8 and ctx.steps == 4
    assert F.evaluate(ctx.u0) == pytest.approx(np.arctan(10 * 0.2 + 5.0), rel=1e-14)
