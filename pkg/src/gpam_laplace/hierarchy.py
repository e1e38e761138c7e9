"""Taylor terms of the shifted solution in the noise intensity.

``u^eps = w_h + sum_m eps^m/m! u^(m) + R``, where each ``u^(m)`` solves a
linear equation along the skeleton whose sources are polynomials in the
lower-order terms. Two routes compute the same numbers:

* :func:`solve_taylor_term` marches one order at a time with the explicit
  coefficient fields of :func:`coefficient_fields`;
* :func:`march_series` marches all orders at once, batched over noise
  samples, by composing Taylor series pointwise (see ``_kernels``).
"""
from dataclasses import dataclass, field
from math import factorial
from typing import List

import numpy as np

from . import _kernels
from .combinatorics import compositions
from .solvers import SolveContext, Trajectory, _march, _times, solve_shifted, solve_skeleton
from .spectral import irfft, rfft


@dataclass
class TaylorHierarchy:
    order: int
    skeleton: Trajectory
    terms: List[Trajectory]
    driver: np.ndarray = field(repr=False)
    c_delta: float
    h: np.ndarray = field(repr=False)

    def term(self, m: int) -> Trajectory:
        return self.terms[m - 1]

    def norms(self):
        return [float(t.sup_norm()) for t in self.terms]


def _prod_over(comp, lower, skip=None):
    out = 1.0
    for pos, i in enumerate(comp):
        if pos != skip:
            out = out * (lower[i - 1] / factorial(i))
    return out


def _a_xi(j, gd, lower):
    """Coefficient of ``xi_delta`` in the equation for order ``j``."""
    if j == 1:
        return gd[0]
    total = 0.0
    for k in range(1, j):
        inner = 0.0
        for comp in compositions(k, j - 1):
            inner = inner + _prod_over(comp, lower)
        total = total + gd[k] / factorial(k) * inner
    return factorial(j) * total


def coefficient_fields(m: int, gd, lower):
    """Pointwise coefficients ``(a_xi, a_c, b_h)`` of the order-``m`` equation.

    Parameters
    ----------
    m : int
        Order, ``m >= 1``.
    gd : sequence of arrays
        ``g^(k)(w_h)`` for ``k = 0..m``.
    lower : sequence of arrays
        ``u^(1), ..., u^(m-1)`` at the same time.
    """
    if m < 1:
        raise ValueError("order must be >= 1")
    if len(lower) < m - 1:
        raise ValueError("order %d needs the %d lower-order terms" % (m, m - 1))
    if len(gd) < m + 1:
        raise ValueError("order %d needs g derivatives up to %d" % (m, m))
    a_xi = _a_xi(m, gd, lower)
    zero = np.zeros_like(np.asarray(gd[0], dtype=float))
    if m == 1:
        return a_xi, zero, zero
    a_low = [_a_xi(j, gd, lower) for j in range(1, m)]
    a_c = 0.0
    for k in range(1, m):
        inner = 0.0
        for comp in compositions(k, m - 1):
            for r, ir in enumerate(comp):
                inner = inner + a_low[ir - 1] / factorial(ir) * _prod_over(comp, lower, skip=r)
        a_c = a_c + gd[k] / factorial(k) * inner
    a_c = factorial(m) * a_c
    b_h = 0.0
    for k in range(2, m + 1):
        inner = 0.0
        for comp in compositions(k, m):
            inner = inner + _prod_over(comp, lower)
        b_h = b_h + gd[k] / factorial(k) * inner
    b_h = factorial(m) * b_h
    return a_xi, a_c + zero, b_h + zero


def solve_taylor_term(m, ctx: SolveContext, hierarchy: TaylorHierarchy, driver, c, save=True) -> Trajectory:
    """March ``(d_t - Lap) u^(m) = a_xi driver - a_c c + (b_h + u^(m) g'(w)) h``."""
    if len(hierarchy.terms) < m - 1:
        raise ValueError("terms 1..%d must be solved first" % (m - 1))
    w = hierarchy.skeleton
    h = hierarchy.h
    lower_traj = hierarchy.terms[: m - 1]
    g = ctx.g

    def source(i, v):
        gd = g.derivs(w.values[i], m)
        lower = [t.values[i] for t in lower_traj]
        a_xi, a_c, b_h = coefficient_fields(m, gd, lower)
        return a_xi * driver - a_c * c + (b_h + v * gd[1]) * h

    init = np.zeros(np.broadcast_shapes(np.shape(driver), ctx.grid.shape))
    return Trajectory(_times(ctx, save), _march(ctx, init, source, save), False)


def _build(ctx, h, driver, c, M, w=None):
    h = np.asarray(h, dtype=float)
    ctx.grid.check(h)
    if w is None:
        w = solve_skeleton(ctx, h)
    hier = TaylorHierarchy(M, w, [], np.asarray(driver, dtype=float), float(c), h)
    for m in range(1, M + 1):
        hier.terms.append(solve_taylor_term(m, ctx, hier, hier.driver, c))
    return hier


def build_hierarchy(ctx: SolveContext, h, xi, M: int, w: Trajectory = None) -> TaylorHierarchy:
    """Terms ``u^(1..M)`` driven by ``xi_delta`` with counterterm ``c_delta``."""
    return _build(ctx, h, ctx.mollify(xi), ctx.c_delta, M, w)


def deterministic_hierarchy(ctx: SolveContext, h, k, M: int, w: Trajectory = None) -> TaylorHierarchy:
    """Same recursion for a smooth driver ``k`` and no renormalisation."""
    return _build(ctx, h, k, 0.0, M, w)


def march_series(ctx: SolveContext, w: Trajectory, h, drivers, c, M: int, save=False):
    """All Taylor terms at once for a batch of drivers.

    Returns an array of shape ``(M, S, n, n)`` holding ``u^(m)(T)`` for
    ``m = 1..M`` (or ``(steps+1, M, S, n, n)`` with ``save``).
    """
    drivers = np.asarray(drivers, dtype=float)
    if drivers.ndim == 2:
        drivers = drivers[None]
    S = drivers.shape[0]
    n = ctx.grid.n
    if ctx.g.is_constant and M > 1:
        # constant g: orders >= 2 have zero sources and stay zero
        first = march_series(ctx, w, h, drivers, c, 1, save)
        pad = np.zeros(first.shape[:-4] + (M - 1,) + first.shape[-3:])
        return np.concatenate([first, pad], axis=-4)
    Q = n * n
    h = np.asarray(h, dtype=float)
    hq = np.ascontiguousarray(np.broadcast_to(h, ctx.grid.shape).reshape(Q))
    dq = drivers.reshape(S, Q)
    coeffs = np.zeros((M, S, n, n))
    ch = rfft(coeffs)
    snaps = [coeffs] if save else None
    for i in range(ctx.steps):
        gvals = ctx.g.derivs(w.values[i], M + 1).reshape(M + 2, Q)
        src = _kernels.source_series(gvals, coeffs.reshape(M, S, Q), dq, hq, c)
        ch = ch * ctx.decay + rfft(src.reshape(M, S, n, n)) * ctx.phi_dealiased
        coeffs = irfft(ch, n)
        if save:
            snaps.append(coeffs)
    fact = np.array([factorial(m) for m in range(1, M + 1)], dtype=float)[:, None, None, None]
    if save:
        return np.stack(snaps) * fact
    return coeffs * fact


def remainder(ctx: SolveContext, h, eps: float, xi, M: int, hierarchy: TaylorHierarchy = None):
    """``R = u^eps - w_h - sum_{m<=M} eps^m/m! u^(m)`` along the whole trajectory.

    Returns ``(R(T), sup-over-time L-infinity norm of R, exploded)``.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if hierarchy is None:
        hierarchy = build_hierarchy(ctx, h, xi, M)
    u = solve_shifted(ctx, h, eps, xi)
    if np.any(u.exploded):
        return None, np.inf, True
    R = u.values - hierarchy.skeleton.values
    for m in range(1, M + 1):
        R = R - eps**m / factorial(m) * hierarchy.term(m).values
    return R[-1], float(np.abs(R).max()), False
