"""Exponential-Euler time stepping for the skeleton, shifted, linearised and
adjoint equations.

Every forward equation has the form ``(d_t - Laplacian) u = N(u)`` and is
advanced by

    u_hat <- exp(-lam dt) u_hat + phi(lam) P[N(u_n)]_hat,
    lam = 4 pi^2 |k|^2,  phi(lam) = (1 - exp(-lam dt)) / lam,  phi(0) = dt,

with ``P`` the two-thirds dealiasing projector. Sources are frozen at the
left end of each step, so every scheme below is the exact derivative (in
the appropriate parameter) of the discrete shifted scheme.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .noise import NoiseRealization, renorm_constant
from .nonlinearity import NonlinearitySpec, get_nonlinearity
from .spectral import FOUR_PI2, Mollifier, TorusGrid, apply_multiplier, heat_multiplier, irfft, rfft


class NumericalFault(RuntimeError):
    """A deterministic solve produced non-finite values."""


@dataclass(frozen=True, eq=False)
class SolveContext:
    grid: TorusGrid
    T: float
    dt: float
    u0: np.ndarray = field(repr=False)
    g: NonlinearitySpec
    mollifier: Mollifier
    c_delta: float

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("T must be positive")
        ratio = self.T / self.dt
        if self.dt <= 0 or abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError("dt=%g does not divide T=%g" % (self.dt, self.T))
        self.grid.check(self.u0)
        self.mollifier.check(self.grid)

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))

    @cached_property
    def times(self):
        return np.arange(self.steps + 1) * self.dt

    @cached_property
    def decay(self):
        return heat_multiplier(self.grid, self.dt)

    @cached_property
    def phi_dealiased(self):
        lam = FOUR_PI2 * self.grid.rksq
        phi = np.full_like(lam, self.dt)
        nz = lam > 0
        phi[nz] = -np.expm1(-lam[nz] * self.dt) / lam[nz]
        return phi * self.grid.dealias_mask

    @cached_property
    def mollifier_multiplier(self):
        return self.mollifier.multiplier(self.grid)

    def mollify(self, xi):
        """``xi_delta`` for a realization, a field or a batch of fields."""
        if isinstance(xi, NoiseRealization):
            if xi.grid != self.grid:
                raise ValueError("noise realization lives on a different grid")
            xi = xi.values
        xi = np.asarray(xi, dtype=float)
        self.grid.check(xi)
        return apply_multiplier(xi, self.mollifier_multiplier, self.grid.n)


def make_context(
    n: int = 64,
    T: float = 0.25,
    dt: Optional[float] = None,
    u0=None,
    g="cos",
    delta: Optional[float] = None,
    c_delta: Optional[float] = None,
) -> SolveContext:
    """Context with defaults ``dt = T/1024``, ``delta = 4/n`` and matching ``c_delta``."""
    grid = TorusGrid(n)
    dt = T / 1024 if dt is None else dt
    u0 = np.zeros(grid.shape) if u0 is None else np.asarray(u0, dtype=float)
    if isinstance(g, str):
        g = get_nonlinearity(g)
    moll = Mollifier(4.0 / n if delta is None else delta)
    if c_delta is None:
        c_delta = renorm_constant(grid, moll).value
    return SolveContext(grid, T, dt, u0, g, moll, float(c_delta))


@dataclass
class Trajectory:
    """Snapshots ``values[i]`` at ``times[i]``; extra axes between are batch axes."""

    times: np.ndarray
    values: np.ndarray = field(repr=False)
    exploded: np.ndarray = False

    @property
    def final(self):
        return self.values[-1]

    def sup_norm(self):
        """Sup over snapshots of the grid L-infinity norm (per batch entry)."""
        return np.abs(self.values).max(axis=(-2, -1)).max(axis=0)


def _march(ctx: SolveContext, init, source, save=True):
    n = ctx.grid.n
    u = np.array(init, dtype=float)
    uh = rfft(u)
    snaps = [u] if save else None
    for i in range(ctx.steps):
        uh = uh * ctx.decay + rfft(source(i, u)) * ctx.phi_dealiased
        u = irfft(uh, n)
        if save:
            snaps.append(u)
    if save:
        return np.stack(snaps)
    return u[None]


def _times(ctx, save):
    return ctx.times if save else ctx.times[-1:]


def solve_driven(ctx: SolveContext, drive, counterterm=0.0, save=True, strict=False):
    """``(d_t - Laplacian) u = g(u)(drive - counterterm g'(u))``, ``u(0) = u0``.

    ``drive`` may carry leading batch axes. Non-finite output marks the
    affected entries as exploded; with ``strict`` it raises instead.
    """
    drive = np.asarray(drive, dtype=float)
    init = np.broadcast_to(ctx.u0, drive.shape)
    g = ctx.g

    if counterterm == 0.0:

        def source(i, u):
            return g.derivs(u, 0)[0] * drive

    else:

        def source(i, u):
            d = g.derivs(u, 1)
            return d[0] * (drive - counterterm * d[1])

    with np.errstate(all="ignore"):
        vals = _march(ctx, init, source, save)
    bad = ~np.isfinite(vals).all(axis=(0, -2, -1))
    if strict and np.any(bad):
        raise NumericalFault("non-finite values in a deterministic solve")
    return Trajectory(_times(ctx, save), vals, bad)


def solve_skeleton(ctx: SolveContext, h) -> Trajectory:
    """Skeleton ``w_h``: ``(d_t - Laplacian) w = g(w) h``."""
    h = np.asarray(h, dtype=float)
    ctx.grid.check(h)
    return solve_driven(ctx, h, 0.0, save=True, strict=True)


def solve_shifted(ctx: SolveContext, h, eps: float, xi=None, save=True) -> Trajectory:
    """Renormalised shifted equation driven by ``eps xi_delta + h``.

    The counterterm is ``eps^2 c_delta g'(u)``. ``xi`` may be a realization,
    one noise field or a batch; ``eps = 0`` (or ``xi=None``) reproduces the
    skeleton bit for bit.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    h = np.asarray(h, dtype=float)
    ctx.grid.check(h)
    if xi is None:
        return solve_driven(ctx, h, 0.0, save=save)
    drive = eps * ctx.mollify(xi) + h
    return solve_driven(ctx, drive, eps**2 * ctx.c_delta, save=save)


def solve_linearized(ctx: SolveContext, w: Trajectory, h, k, save=True) -> Trajectory:
    """Directional derivative ``v_{h,k}``: ``(d_t - Laplacian) v = g'(w) h v + g(w) k``."""
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    _check_skeleton(ctx, w)
    g = ctx.g

    def source(i, v):
        d = g.derivs(w.values[i], 1)
        return d[1] * h * v + d[0] * k

    init = np.zeros(np.broadcast_shapes(k.shape, ctx.grid.shape))
    return Trajectory(_times(ctx, save), _march(ctx, init, source, save), False)


def _check_skeleton(ctx, w):
    if w.values.shape[0] != ctx.steps + 1:
        raise ValueError("skeleton trajectory must hold every time step of the context")


def solve_adjoint(ctx: SolveContext, w: Trajectory, h, terminal) -> Trajectory:
    """Discrete adjoint of :func:`solve_linearized`, marched backwards from ``p(T)``.

    With ``q_n = phi P p_{n+1}`` the recursion is
    ``p_n = exp(-lam dt) p_{n+1} + g'(w_n) h q_n``, so that
    ``<v_{h,k}(T), terminal> = sum_n <g(w_n) k, q_n>`` holds exactly.
    """
    _check_skeleton(ctx, w)
    h = np.asarray(h, dtype=float)
    terminal = np.asarray(terminal, dtype=float)
    n = ctx.grid.n
    g = ctx.g
    N = ctx.steps
    vals = np.empty((N + 1,) + terminal.shape)
    vals[N] = terminal
    ph = rfft(terminal)
    for i in range(N - 1, -1, -1):
        q = irfft(ph * ctx.phi_dealiased, n)
        gp = g.derivs(w.values[i], 1)[1]
        ph = ph * ctx.decay + rfft(gp * h * q)
        vals[i] = irfft(ph, n)
    return Trajectory(ctx.times, vals, False)


def adjoint_source_weights(ctx: SolveContext, p: Trajectory):
    """``q_n = phi P p_{n+1}`` for ``n = 0..N-1`` (the discrete time quadrature)."""
    return apply_multiplier(p.values[1:], ctx.phi_dealiased, ctx.grid.n)


def adjoint_sensitivity(ctx: SolveContext, w: Trajectory, p: Trajectory):
    """Field ``r`` with ``<v_{h,k}(T), p(T)> = <r, k>`` for every ``k``."""
    q = adjoint_source_weights(ctx, p)
    gw = ctx.g.derivs(w.values[:-1], 0)[0]
    return np.sum(gw * q, axis=0)
