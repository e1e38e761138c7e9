import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gpam_laplace.problems import cos_problem, gaussian_problem
from gpam_laplace.solvers import make_context

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


def cos_mode(grid, k1=1, k2=0):
    x1, x2 = grid.coords
    return np.cos(2 * np.pi * (k1 * x1 + k2 * x2))


@pytest.fixture(scope="session")
def small_ctx():
    """16^2 grid, 32 steps: cheap enough for finite-difference checks."""
    ctx = make_context(n=16, T=0.05, dt=0.05 / 32, g="cos")
    from dataclasses import replace

    return replace(ctx, u0=0.3 + cos_mode(ctx.grid))


@pytest.fixture(scope="session")
def cos_bench():
    return cos_problem()


@pytest.fixture(scope="session")
def gauss_bench():
    return gaussian_problem()
