"""Path functionals ``F`` and their Taylor coefficients along the hierarchy."""
from dataclasses import dataclass, field
from math import factorial, pi

import numpy as np
from numpy.polynomial import hermite as _herm
from numpy.polynomial import polynomial as _poly

from .combinatorics import compositions
from .hierarchy import TaylorHierarchy, build_hierarchy, deterministic_hierarchy
from .solvers import SolveContext, Trajectory, solve_shifted
from .spectral import TorusGrid

# ------------------------------------------------------------------ profiles


def _arctan(s, K):
    out = np.empty((K + 1,) + s.shape)
    out[0] = np.arctan(s)
    z = 1.0 / (s - 1j)
    zp = z
    for k in range(1, K + 1):
        # arctan' = Im 1/(s - i)
        out[k] = (-1) ** (k - 1) * factorial(k - 1) * zp.imag
        zp = zp * z
    return out


def _tanh(s, K):
    t = np.tanh(s)
    out = np.empty((K + 1,) + s.shape)
    p = np.array([0.0, 1.0])
    one_minus_t2 = np.array([1.0, 0.0, -1.0])
    for k in range(K + 1):
        out[k] = _poly.polyval(t, p)
        p = _poly.polymul(_poly.polyder(p), one_minus_t2)
    return out


def _erf_bump(s, K):
    # Phi(s) = int_0^s exp(-x^2) dx; Phi^(k) = (-1)^(k-1) H_{k-1}(s) exp(-s^2)
    from scipy.special import erf

    out = np.empty((K + 1,) + s.shape)
    out[0] = 0.5 * np.sqrt(pi) * erf(s)
    g = np.exp(-s * s)
    for k in range(1, K + 1):
        c = np.zeros(k)
        c[-1] = 1.0
        out[k] = (-1) ** (k - 1) * _herm.hermval(s, c) * g
    return out


def _linear(s, K):
    out = np.zeros((K + 1,) + s.shape)
    out[0] = s
    if K >= 1:
        out[1] = 1.0
    return out


_PROFILES = {"arctan": _arctan, "tanh": _tanh, "bump": _erf_bump, "linear": _linear}


@dataclass(frozen=True)
class Profile:
    """Scalar outer function ``Phi`` with derivatives of all orders."""

    name: str

    def derivs(self, s, K: int):
        return _PROFILES[self.name](np.asarray(s, dtype=float), K)

    def sup(self, k: int) -> float:
        """``sup_s |Phi^(k)(s)|`` (``inf`` for unbounded orders)."""
        if self.name == "linear":
            return np.inf if k == 0 else (1.0 if k == 1 else 0.0)
        if self.name == "arctan":
            return pi / 2 if k == 0 else float(factorial(k - 1))
        s = np.linspace(-12.0, 12.0, 240001)
        return float(np.abs(self.derivs(s, k)[k]).max()) * 1.001


# --------------------------------------------------------------- functionals


class Functional:
    """Interface: values and directional derivatives at terminal fields.

    ``u`` arguments are terminal fields (optionally batched) or
    :class:`Trajectory` objects, in which case the last snapshot is used.
    """

    def evaluate(self, u):
        raise NotImplementedError

    def derivative(self, u, directions):
        """``D^(k) F|_u [y_1, ..., y_k]`` with ``k = len(directions)``."""
        raise NotImplementedError

    def sensitivity(self, u):
        """Field ``s`` with ``DF|_u[y] = <y(T), s>``, or ``None`` if unavailable."""
        return None

    def bound(self, k: int) -> float:
        return np.inf


def _terminal(u):
    return u.final if isinstance(u, Trajectory) else np.asarray(u, dtype=float)


@dataclass(frozen=True, eq=False)
class TerminalFunctional(Functional):
    """``F(u) = Phi(<u(T), psi>)``."""

    grid: TorusGrid
    psi: np.ndarray = field(repr=False)
    profile: Profile

    def project(self, u):
        return self.grid.inner(_terminal(u), self.psi)

    def evaluate(self, u):
        return self.profile.derivs(self.project(u), 0)[0]

    def derivative(self, u, directions):
        k = len(directions)
        out = self.profile.derivs(self.project(u), k)[k]
        for y in directions:
            out = out * self.project(y)
        return out

    def sensitivity(self, u):
        d1 = self.profile.derivs(self.project(u), 1)[1]
        return np.multiply.outer(d1, self.psi) if np.ndim(d1) else d1 * self.psi

    def bound(self, k: int) -> float:
        """``M_k`` for the sup norm: ``sup|Phi^(k)| * ||psi||_{L1}^k``."""
        l1 = float(np.abs(self.psi).sum()) / self.grid.n**2
        return self.profile.sup(k) * l1**k


@dataclass(frozen=True)
class ConstantFunctional(Functional):
    value: float = 0.0

    def evaluate(self, u):
        u = _terminal(u)
        return np.full(u.shape[:-2], self.value) if u.ndim > 2 else self.value

    def derivative(self, u, directions):
        u = _terminal(u)
        return np.zeros(u.shape[:-2]) if u.ndim > 2 else 0.0

    def sensitivity(self, u):
        return np.zeros_like(_terminal(u))

    def bound(self, k: int) -> float:
        return abs(self.value) if k == 0 else 0.0


def builtin_functional(kind: str, grid: TorusGrid = None, psi=None, profile: str = "arctan", value: float = 0.0):
    """``kind`` is ``"terminal"`` (``Phi(<u(T), psi>)``), ``"constant"`` or ``"zero"``."""
    if kind == "zero":
        return ConstantFunctional(0.0)
    if kind == "constant":
        return ConstantFunctional(float(value))
    if kind == "terminal":
        if profile not in _PROFILES:
            raise ValueError("unknown profile %r (choose from %s)" % (profile, sorted(_PROFILES)))
        if grid is None or psi is None:
            raise ValueError("terminal functionals need a grid and psi")
        psi = np.asarray(psi, dtype=float)
        grid.check(psi)
        return TerminalFunctional(grid, psi, Profile(profile))
    raise ValueError("unsupported functional kind %r" % kind)


# ---------------------------------------------------------- Taylor coefficients


def fhat(m: int, F: Functional, base, terms):
    """``m``-th eps-derivative of ``F(u^eps)`` at 0.

    ``base`` is ``w_h`` and ``terms[j-1]`` is ``u^(j)`` (terminal fields or
    trajectories, optionally batched).
    """
    if len(terms) < m:
        raise ValueError("fhat(%d) needs %d hierarchy terms, got %d" % (m, m, len(terms)))
    scaled = [_terminal(t) / factorial(j) for j, t in enumerate(terms[:m], start=1)]
    total = 0.0
    for k in range(1, m + 1):
        acc = 0.0
        for comp in compositions(k, m):
            acc = acc + F.derivative(base, [scaled[i - 1] for i in comp])
        total = total + acc / factorial(k)
    return factorial(m) * total


def jet(F: Functional, base, terms, order: int):
    """``[F^(1), ..., F^(order)]``."""
    return [fhat(m, F, base, terms) for m in range(1, order + 1)]


def _from_hierarchy(hierarchy: TaylorHierarchy):
    return hierarchy.skeleton.final, [t.final for t in hierarchy.terms]


def qhat(F: Functional, hierarchy: TaylorHierarchy):
    """Second eps-derivative ``DF(u^(2)) + D^2F(u^(1), u^(1))``."""
    base, terms = _from_hierarchy(hierarchy)
    return fhat(2, F, base, terms)


def qhat_deterministic(F: Functional, ctx: SolveContext, h, k, w=None):
    """``d^2/ds^2 F(w_{h + s k})`` at ``s = 0``."""
    return qhat(F, deterministic_hierarchy(ctx, h, k, 2, w))


def functional_remainder(F: Functional, ctx: SolveContext, h, eps: float, xi, N: int, hierarchy=None):
    """``F(u^eps) - F(w_h) - sum_{m<=N+2} eps^m/m! F^(m)``; ``nan`` if exploded."""
    if hierarchy is None:
        hierarchy = build_hierarchy(ctx, h, xi, N + 2)
    u = solve_shifted(ctx, h, eps, xi, save=False)
    if np.any(u.exploded):
        return np.nan
    base, terms = _from_hierarchy(hierarchy)
    out = F.evaluate(u.final) - F.evaluate(base)
    for m, fm in enumerate(jet(F, base, terms, N + 2), start=1):
        out = out - eps**m / factorial(m) * fm
    return out
