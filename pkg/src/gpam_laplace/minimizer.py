"""Minimisation of ``F(w_h) + ||h||^2 / 2`` over the Cameron-Martin space."""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .functionals import Functional, fhat
from .hierarchy import march_series
from .solvers import SolveContext, Trajectory, adjoint_sensitivity, solve_adjoint, solve_skeleton

log = logging.getLogger(__name__)


@dataclass
class MinimizerResult:
    h_star: np.ndarray = field(repr=False)
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    history: List[dict] = field(default_factory=list, repr=False)
    probe_quotients: Optional[np.ndarray] = None

    @property
    def hessian_min_quotient(self):
        return None if self.probe_quotients is None else float(np.min(self.probe_quotients))

    def to_json(self, h_star_file=None):
        return {
            "value": self.value,
            "grad_norm": self.grad_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "probe_quotients": None if self.probe_quotients is None else [float(q) for q in self.probe_quotients],
            "hessian_min_quotient": self.hessian_min_quotient,
            "h_star_file": h_star_file,
        }


def total_objective(F: Functional, ctx: SolveContext, h, w: Trajectory = None) -> float:
    h = np.asarray(h, dtype=float)
    if w is None:
        w = solve_skeleton(ctx, h)
    return float(F.evaluate(w.final)) + 0.5 * float(ctx.grid.inner(h, h))


def _fd_gradient(F, ctx, h, s=1e-6):
    n = ctx.grid.n
    r = np.empty(ctx.grid.shape)
    for i in range(n):
        for j in range(n):
            e = np.zeros(ctx.grid.shape)
            e[i, j] = n * n  # <r, e> = r[i, j]
            fp = F.evaluate(solve_skeleton(ctx, h + s * e).final)
            fm = F.evaluate(solve_skeleton(ctx, h - s * e).final)
            r[i, j] = (fp - fm) / (2 * s)
    return r


def value_and_gradient(F: Functional, ctx: SolveContext, h):
    """``(value, gradient, skeleton)``; the gradient is the L2 Riesz representative.

    ``<gradient, k> = <h, k> + DF|_{w_h}(v_{h,k})``, assembled with one
    backward adjoint solve that is the exact transpose of the discrete
    linearised scheme.
    """
    h = np.asarray(h, dtype=float)
    w = solve_skeleton(ctx, h)
    value = total_objective(F, ctx, h, w)
    sens = F.sensitivity(w.final)
    if sens is None:
        r = _fd_gradient(F, ctx, h)
    elif not np.any(sens):
        r = np.zeros_like(h)
    else:
        p = solve_adjoint(ctx, w, h, sens)
        r = adjoint_sensitivity(ctx, w, p)
    return value, h + r, w


def gradient(F: Functional, ctx: SolveContext, h):
    return value_and_gradient(F, ctx, h)[1]


def minimize(F: Functional, ctx: SolveContext, h0=None, tol: float = 1e-6, max_iter: int = 200) -> MinimizerResult:
    """Barzilai-Borwein descent with Armijo backtracking in the L2 inner product.

    Stops once ``||grad|| <= tol (1 + ||h||)``. Non-convergence is logged
    and reported through ``converged=False``.
    """
    grid = ctx.grid
    h = np.zeros(grid.shape) if h0 is None else np.array(h0, dtype=float)
    f, g, _ = value_and_gradient(F, ctx, h)
    gn = float(grid.norm(g))
    history = [{"iter": 0, "value": f, "grad_norm": gn, "step": 0.0}]
    alpha = 1.0
    it = 0
    converged = gn <= tol * (1 + float(grid.norm(h)))
    while not converged and it < max_iter:
        it += 1
        # rounding floor for the sufficient-decrease test near the optimum
        slack = 1e-13 * (1.0 + abs(f))
        for _ in range(40):
            h_new = h - alpha * g
            f_new, g_new, _ = value_and_gradient(F, ctx, h_new)
            if f_new <= f - 1e-4 * alpha * gn**2 + slack:
                break
            alpha *= 0.5
        else:
            log.warning("line search failed at iteration %d", it)
            break
        s = h_new - h
        y = g_new - g
        sy = float(grid.inner(s, y))
        alpha = float(grid.inner(s, s)) / sy if sy > 0 else 1.0
        alpha = min(max(alpha, 1e-4), 1e4)
        h, f, g = h_new, f_new, g_new
        gn = float(grid.norm(g))
        history.append({"iter": it, "value": f, "grad_norm": gn, "step": float(grid.norm(s))})
        converged = gn <= tol * (1 + float(grid.norm(h)))
    if not converged:
        log.warning("minimizer stopped after %d iterations with |grad| = %.3e", it, gn)
    return MinimizerResult(h, f, gn, it, converged, history)


def multistart(F: Functional, ctx: SolveContext, starts: int = 4, scale: float = 1.0, seed: int = 0,
               tol: float = 1e-6, max_iter: int = 200):
    """Run :func:`minimize` from ``h = 0`` and ``starts - 1`` random low-mode fields.

    Returns the best result and the list of all results. Distinct local
    minima among the runs signal a possible failure of uniqueness; agreement
    does not prove it.
    """
    starts_h = [np.zeros(ctx.grid.shape)]
    if starts > 1:
        rand = probe_directions(ctx.grid, radius=0, n_random=starts - 1, seed=seed)[1:]
        starts_h.extend(scale * rand)
    results = [minimize(F, ctx, h0, tol, max_iter) for h0 in starts_h]
    best = min(results, key=lambda r: r.value)
    return best, results


def probe_directions(grid, radius: int = 2, n_random: int = 8, seed: int = 0):
    """Unit-norm probes: real Fourier modes with ``|k| <= radius`` plus random low-mode fields."""
    x1, x2 = grid.coords
    probes = [np.ones(grid.shape)]
    for k1 in range(0, radius + 1):
        for k2 in range(-radius, radius + 1):
            if (k1 == 0 and k2 <= 0) or k1 * k1 + k2 * k2 > radius * radius:
                continue
            arg = 2 * np.pi * (k1 * x1 + k2 * x2)
            probes.append(np.sqrt(2) * np.cos(arg))
            probes.append(np.sqrt(2) * np.sin(arg))
    rng = np.random.default_rng(seed)
    kmax = 4
    for _ in range(n_random):
        f = np.zeros(grid.shape)
        for k1 in range(-kmax, kmax + 1):
            for k2 in range(-kmax, kmax + 1):
                a, b = rng.standard_normal(2)
                arg = 2 * np.pi * (k1 * x1 + k2 * x2)
                f += a * np.cos(arg) + b * np.sin(arg)
        probes.append(f / grid.norm(f))
    return np.stack(probes)


def second_variation(F: Functional, ctx: SolveContext, h, directions, w: Trajectory = None):
    """``Q_h(L(k)) = d^2/ds^2 F(w_{h+sk})`` at 0 for a batch of directions."""
    if w is None:
        w = solve_skeleton(ctx, h)
    terms = march_series(ctx, w, h, directions, 0.0, 2)
    return fhat(2, F, w.final, [terms[0], terms[1]])


def nondegeneracy_probe(F: Functional, ctx: SolveContext, h_star, probes=None, w: Trajectory = None):
    """Rayleigh quotients ``(Q_h(L(k)) + ||k||^2) / ||k||^2`` over the probes."""
    if probes is None:
        probes = probe_directions(ctx.grid)
    probes = np.asarray(probes, dtype=float)
    q = np.broadcast_to(second_variation(F, ctx, h_star, probes, w), probes.shape[:1])
    nk = ctx.grid.inner(probes, probes)
    return (q + nk) / nk
