"""Reference problems used by the acceptance suite, the CLI defaults and the
benchmarks.

``cos_problem``
    ``g = cos`` with an arctan terminal functional.
``gaussian_problem``
    ``g = 1``: the solution is affine in the noise and ``J(eps)`` collapses to
    a one-dimensional Gaussian integral; :class:`GaussianOracle` evaluates
    it independently of the PDE machinery.
"""
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, optimize

from .functionals import builtin_functional
from .solvers import make_context
from .spectral import FOUR_PI2


def _cos_mode(grid, k1=1, k2=0):
    x1, x2 = grid.coords
    return np.cos(2 * np.pi * (k1 * x1 + k2 * x2))


def cos_problem(n=32, T=0.1, steps=128, amplitude=10.0, mean0=0.2, delta=None):
    """``g = cos``, ``u0 = mean0 + cos(2 pi x1)``, ``F = arctan(<u(T), amplitude (1 + cos 2 pi x1)>)``."""
    ctx = make_context(n=n, T=T, dt=T / steps, g="cos", delta=delta)
    c1 = _cos_mode(ctx.grid)
    ctx = replace(ctx, u0=mean0 + c1)
    F = builtin_functional("terminal", ctx.grid, amplitude * (1.0 + c1), "arctan")
    return ctx, F


def gaussian_problem(n=32, T=0.1, steps=128, amplitude=10.0, mean0=0.2, b=1.0, delta=None):
    """``g = 1`` variant of :func:`cos_problem` with ``u0 = mean0 + b cos(2 pi x1)``."""
    ctx = make_context(n=n, T=T, dt=T / steps, g="one", delta=delta)
    c1 = _cos_mode(ctx.grid)
    ctx = replace(ctx, u0=mean0 + b * c1)
    F = builtin_functional("terminal", ctx.grid, amplitude * (1.0 + c1), "arctan")
    return ctx, F, GaussianOracle(T, amplitude, mean0, b)


@dataclass(frozen=True)
class GaussianOracle:
    """Closed-form reduction of the ``g = 1`` arctan problem.

    With ``psi = A(1 + cos 2 pi x1)`` the pairing ``<u^eps(T), psi>`` equals
    ``mu0 + <h, a> + eps sigma G`` with ``G ~ N(0, 1)``, where
    ``a = int_0^T e^{s Lap} psi ds`` and ``sigma = ||a||`` (the mollifier is
    flat on the modes of ``a``).
    """

    T: float
    A: float
    mean0: float
    b: float

    @property
    def lam(self):
        return FOUR_PI2

    @property
    def mu0(self):
        return self.A * (self.mean0 + 0.5 * self.b * np.exp(-self.lam * self.T))

    @property
    def c1(self):
        return -np.expm1(-self.lam * self.T) / self.lam

    @property
    def sigma(self):
        return self.A * np.sqrt(self.T**2 + 0.5 * self.c1**2)

    def a_field(self, grid):
        return self.A * (self.T + self.c1 * _cos_mode(grid))

    def t_star(self):
        """Root of ``1/(1 + (mu0 + t)^2) + t / sigma^2 = 0``."""
        s2 = self.sigma**2
        return optimize.brentq(lambda t: 1.0 / (1.0 + (self.mu0 + t) ** 2) + t / s2, -10 * s2 - 10, 0.0, xtol=1e-15)

    def value(self):
        t = self.t_star()
        return float(np.arctan(self.mu0 + t) + t**2 / (2 * self.sigma**2))

    def h_star(self, grid):
        a = self.a_field(grid)
        return self.t_star() * a / self.sigma**2

    def J(self, eps):
        """``exp(F*/eps^2) J(eps)`` by adaptive quadrature."""
        F0 = self.value()
        s = self.sigma

        def f(g):
            return np.exp(-(np.arctan(self.mu0 + eps * s * g) - F0) / eps**2 - 0.5 * g * g) / np.sqrt(2 * np.pi)

        g0 = self.t_star() / (eps * s)
        # split at the peak so quad sees the narrow bump
        pieces = ((-np.inf, g0 - 40), (g0 - 40, g0), (g0, g0 + 40), (g0 + 40, np.inf))
        val = sum(integrate.quad(f, lo, hi, limit=400, epsabs=0, epsrel=1e-12)[0] for lo, hi in pieces)
        return float(val)

    def coefficients(self, N):
        """``a_0..a_N`` from the symbolic expansion of the 1-D Laplace integral."""
        import sympy as sp

        eps, x = sp.symbols("eps x", real=True)
        sig = sp.Float(self.sigma, 30)
        s_star = sp.Float(self.mu0 + self.t_star(), 30)
        phi = sp.atan(s_star + eps * sig * x)
        # exponent beyond the quadratic part, divided by eps^2
        ser = sp.series(phi, eps, 0, N + 3).removeO()
        poly = sp.Poly(sp.expand(ser), eps)
        higher = sum(poly.coeff_monomial(eps**j) * eps ** (j - 2) for j in range(3, N + 3))
        q = sp.Float(float(poly.coeff_monomial(eps**2).coeff(x, 2)) * 2, 30)
        expo = sp.series(sp.exp(-higher), eps, 0, N + 1).removeO()
        out = []
        for m in range(N + 1):
            wm = sp.Poly(sp.expand(expo).coeff(eps, m), x)
            total = 0.0
            for (p,), c in wm.terms():
                if p % 2:
                    continue
                dfact = float(np.prod(np.arange(p - 1, 0, -2))) if p > 0 else 1.0
                total += float(c) * dfact * float(1.0 + q) ** (-(p + 1) / 2)
            out.append(total)
        return np.array(out)
