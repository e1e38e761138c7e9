"""Monte Carlo estimators for ``J(eps) = E exp(-F(u^eps)/eps^2)`` and its
Laplace expansion around the minimiser.

All estimators draw sample ``i`` from ``hash64(seed, i)``, work in chunks,
and reduce in index order, so results do not depend on chunking or on the
number of worker processes.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import factorial
from typing import Dict, List, Optional, Sequence

import numpy as np

from .combinatorics import weights_W
from .functionals import Functional, fhat
from .hierarchy import march_series
from .minimizer import total_objective
from .noise import model_norm_approx, pair, sample_noise_fields, sample_seeds
from .solvers import SolveContext, solve_shifted, solve_skeleton

log = logging.getLogger(__name__)

DEFAULT_CHUNK = 500


# ------------------------------------------------------------------ plumbing


def _run_chunks(fn, args, samples, seed, chunk, jobs):
    starts = list(range(0, samples, chunk))
    tasks = [(seed, s, min(chunk, samples - s)) for s in starts]
    if jobs and jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_call, [(fn, args, t) for t in tasks]))
    else:
        parts = [fn(*args, *t) for t in tasks]
    return {key: np.concatenate([p[key] for p in parts], axis=-1) for key in parts[0]}


def _call(packed):
    fn, args, task = packed
    return fn(*args, *task)


def _noise(ctx, seed, start, count):
    return sample_noise_fields(ctx.grid, sample_seeds(seed, count, start))


@dataclass
class MCEstimate:
    """``J = exp(-offset/eps^2) * mean``; ``mean`` and ``se`` are on the scaled level."""

    eps: float
    mean: float
    se: float
    offset: float
    samples: int
    exploded: int
    values: np.ndarray = field(repr=False, default=None)

    @property
    def value(self):
        return float(np.exp(-self.offset / self.eps**2) * self.mean)

    @property
    def value_se(self):
        return float(np.exp(-self.offset / self.eps**2) * self.se)


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    se = float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else np.nan
    return float(x.mean()), se


# ------------------------------------------------------------- direct / shifted


def _direct_chunk(F, ctx, eps, offset, seed, start, count):
    xi = _noise(ctx, seed, start, count)
    h0 = np.zeros(ctx.grid.shape)
    u = solve_shifted(ctx, h0, eps, xi, save=False)
    bad = np.asarray(u.exploded)
    with np.errstate(all="ignore"):
        fv = np.asarray(F.evaluate(u.final), dtype=float) * np.ones(count)
        w = np.exp(-(fv - offset) / eps**2)
    w[bad] = 0.0
    return {"w": w, "bad": bad.astype(float)}


def mc_direct(F: Functional, ctx: SolveContext, eps: float, samples: int, seed: int, offset: float = 0.0,
              chunk: int = DEFAULT_CHUNK, jobs: int = 1) -> MCEstimate:
    """Plain estimator of ``J(eps)``; exploded samples contribute 0.

    ``offset`` rescales per-sample weights to ``exp(-(F - offset)/eps^2)`` to
    avoid underflow; pass ``F(h*)`` to estimate ``exp(F(h*)/eps^2) J(eps)``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    out = _run_chunks(_direct_chunk, (F, ctx, eps, offset), samples, seed, chunk, jobs)
    m, se = _mean_se(out["w"])
    return MCEstimate(eps, m, se, offset, samples, int(out["bad"].sum()), out["w"])


def _shifted_chunk(F, ctx, h, f_skel, eps, rho, norm_opts, seed, start, count):
    xi = _noise(ctx, seed, start, count)
    u = solve_shifted(ctx, h, eps, xi, save=False)
    bad = np.asarray(u.exploded)
    with np.errstate(all="ignore"):
        ftilde = np.asarray(F.evaluate(u.final), dtype=float) - f_skel + eps * pair(xi, h, ctx.grid)
        w = np.exp(-ftilde / eps**2)
    w[bad] = 0.0
    if np.isfinite(rho):
        z = model_norm_approx(xi, ctx.grid, ctx.mollifier, ctx.c_delta, **norm_opts).combined
        w[eps * z >= rho] = 0.0
    return {"w": w, "bad": bad.astype(float)}


def mc_shifted(F: Functional, ctx: SolveContext, h_star, eps: float, samples: int, seed: int,
               rho: float = np.inf, norm_opts: Optional[dict] = None,
               chunk: int = DEFAULT_CHUNK, jobs: int = 1) -> MCEstimate:
    """Cameron-Martin shifted estimator centred at ``h_star``.

    ``J = exp(-F(h*)/eps^2) E[exp(-Ftilde/eps^2); eps ||Z|| < rho]`` with
    ``Ftilde = F(u^eps_h) - F(w_h) + eps xi(h)``. ``rho = inf`` drops the
    indicator.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    h = np.asarray(h_star, dtype=float)
    w = solve_skeleton(ctx, h)
    f_skel = float(F.evaluate(w.final))
    value = total_objective(F, ctx, h, w)
    args = (F, ctx, h, f_skel, eps, rho, norm_opts or {})
    out = _run_chunks(_shifted_chunk, args, samples, seed, chunk, jobs)
    m, se = _mean_se(out["w"])
    return MCEstimate(eps, m, se, value, samples, int(out["bad"].sum()), out["w"])


# ---------------------------------------------------------------- coefficients


def _coeff_chunk(F, ctx, h, w, N, seed, start, count):
    xi = _noise(ctx, seed, start, count)
    order = N + 2
    terms = march_series(ctx, w, h, ctx.mollify(xi), ctx.c_delta, order)
    base = w.final
    jet = [np.asarray(fhat(m, F, base, terms), dtype=float) * np.ones(count) for m in range(1, order + 1)]
    Q = jet[1]
    W = weights_W({j: jet[j - 1] for j in range(3, order + 1)}, N)
    W = np.stack([np.asarray(x, dtype=float) * np.ones(count) for x in W])
    return {
        "qhat": Q,
        "W": W,
        "f1": jet[0],
        "pair": pair(xi, h, ctx.grid) * np.ones(count),
        "u1": np.abs(terms[0]).max(axis=(-2, -1)),
    }


@dataclass
class CoeffEstimate:
    a: np.ndarray
    se: np.ndarray
    qhat: np.ndarray = field(repr=False)
    W: np.ndarray = field(repr=False)
    first_order: np.ndarray = field(repr=False)
    u1_norm: np.ndarray = field(repr=False)

    @property
    def samples(self):
        return self.qhat.size

    def per_sample(self):
        """``exp(-Q/2) W_m`` per sample, shape ``(N+1, S)``."""
        return np.exp(-0.5 * self.qhat) * self.W


def coefficient_samples(F, ctx, h_star, N, samples, seed, chunk=DEFAULT_CHUNK, jobs=1):
    h = np.asarray(h_star, dtype=float)
    w = solve_skeleton(ctx, h)
    return _run_chunks(_coeff_chunk, (F, ctx, h, w, N), samples, seed, chunk, jobs)


def mc_coeff(F: Functional, ctx: SolveContext, h_star, N: int, samples: int, seed: int,
             chunk: int = DEFAULT_CHUNK, jobs: int = 1) -> CoeffEstimate:
    """``a_m = E[exp(-Q/2) W_m]`` for ``m = 0..N`` with standard errors."""
    out = coefficient_samples(F, ctx, h_star, N, samples, seed, chunk, jobs)
    vals = np.exp(-0.5 * out["qhat"]) * out["W"]
    stats = [_mean_se(v) for v in vals]
    return CoeffEstimate(
        np.array([s[0] for s in stats]),
        np.array([s[1] for s in stats]),
        out["qhat"],
        out["W"],
        out["f1"] + out["pair"],
        out["u1"],
    )


# ------------------------------------------------------------------- reports


COMPARE_COLUMNS = ("eps", "J_direct", "SE_direct", "J_shifted", "SE_shifted", "expansion", "gap", "gap_SE")


@dataclass
class ExpansionReport:
    value: float
    a: np.ndarray
    a_se: np.ndarray
    rows: List[Dict[str, float]]
    samples: int
    seed: int
    exploded: Dict[float, int]

    def to_json(self):
        return {
            "F_h_star": self.value,
            "a": [float(x) for x in self.a],
            "a_se": [float(x) for x in self.a_se],
            "rows": self.rows,
            "samples": self.samples,
            "seed": self.seed,
            "exploded": {repr(k): v for k, v in self.exploded.items()},
        }


def expansion_compare(F: Functional, ctx: SolveContext, h_star, eps_list: Sequence[float], N: int,
                      samples: int, seed: int, chunk: int = DEFAULT_CHUNK, jobs: int = 1) -> ExpansionReport:
    """Direct, shifted and expanded values of ``J(eps)`` per ``eps``.

    The ``COMPARE_COLUMNS`` are in units of ``J``; the ``scaled_*`` entries
    carry the same quantities multiplied by ``exp(F(h*)/eps^2)``.
    Uses common random numbers throughout; ``gap_SE`` comes from the paired
    per-sample differences between the direct and expansion integrands.
    """
    h = np.asarray(h_star, dtype=float)
    value = total_objective(F, ctx, h)
    coeff = mc_coeff(F, ctx, h, N, samples, seed, chunk, jobs)
    per = coeff.per_sample()
    rows = []
    exploded = {}
    for eps in eps_list:
        d = mc_direct(F, ctx, eps, samples, seed, offset=value, chunk=chunk, jobs=jobs)
        s = mc_shifted(F, ctx, h, eps, samples, seed, chunk=chunk, jobs=jobs)
        powers = np.array([eps**m for m in range(N + 1)])[:, None]
        e_i = np.sum(per * powers, axis=0)
        diff = d.values - e_i
        _, gap_se = _mean_se(diff)
        expansion = float(np.sum(coeff.a * powers[:, 0]))
        scale = np.exp(-value / eps**2)
        rows.append({
            "eps": float(eps),
            "J_direct": d.value,
            "SE_direct": d.value_se,
            "J_shifted": s.value,
            "SE_shifted": s.value_se,
            "expansion": scale * expansion,
            "gap": scale * abs(d.mean - expansion),
            "gap_SE": scale * gap_se,
            "scaled_expansion": expansion,
            "scaled_gap": abs(d.mean - expansion),
            "scaled_gap_SE": gap_se,
            "scaled_direct": d.mean,
            "scaled_direct_SE": d.se,
            "scaled_shifted": s.mean,
            "scaled_shifted_SE": s.se,
        })
        exploded[float(eps)] = d.exploded
    return ExpansionReport(value, coeff.a, coeff.se, rows, samples, seed, exploded)


def varadhan_check(F: Functional, ctx: SolveContext, h_star, eps_list: Sequence[float], samples: int,
                   seed: int, method: str = "shifted", chunk: int = DEFAULT_CHUNK, jobs: int = 1):
    """``eps^2 log J(eps) + F(h*)`` per ``eps`` with a delta-method SE."""
    h = np.asarray(h_star, dtype=float)
    value = total_objective(F, ctx, h)
    out = []
    for eps in eps_list:
        if method == "shifted":
            est = mc_shifted(F, ctx, h, eps, samples, seed, chunk=chunk, jobs=jobs)
        elif method == "direct":
            est = mc_direct(F, ctx, eps, samples, seed, offset=value, chunk=chunk, jobs=jobs)
        else:
            raise ValueError("method must be 'shifted' or 'direct'")
        with np.errstate(divide="ignore"):
            v = eps**2 * np.log(est.mean)
        out.append({"eps": float(eps), "value": float(v), "se": float(eps**2 * est.se / est.mean)})
    return out


# ---------------------------------------------------------------------- tails


@dataclass
class TailDiagnostic:
    """Empirical survival curve of ``values`` and a fitted tail coefficient.

    ``kind`` is ``"gaussian"`` (``log P(X > r) ~ a - coef r^2``) or
    ``"exponential"`` (``~ a - coef r``).
    """

    kind: str
    values: np.ndarray = field(repr=False)
    r: np.ndarray = field(repr=False)
    log_survival: np.ndarray = field(repr=False)
    coef: float
    coef_ci: tuple
    moments: Dict[float, dict]

    def survival_table(self):
        return np.column_stack([self.r, self.log_survival])


def _tail_points(x, lo=0.5, min_exceed=20):
    xs = np.sort(x)
    S = xs.size
    top = 1.0 - min_exceed / S
    qs = np.linspace(lo, max(lo, top), 25)
    r = np.quantile(xs, qs)
    surv = 1.0 - np.searchsorted(xs, r, side="right") / S
    ok = surv > 0
    return r[ok], np.log(surv[ok])


def _fit_tail(x, kind):
    r, ls = _tail_points(x)
    if r.size < 3 or np.ptp(r) == 0:
        return np.nan
    feat = r**2 if kind == "gaussian" else r
    return float(-np.polyfit(feat, ls, 1)[0])


def _tail_diagnostic(values, kind, moment_params, moment_fn, n_boot=200, seed=0):
    values = np.asarray(values, dtype=float)
    r, ls = _tail_points(values)
    coef = _fit_tail(values, kind)
    if np.isfinite(coef):
        rng = np.random.default_rng(seed)
        boots = [_fit_tail(values[rng.integers(0, values.size, values.size)], kind) for _ in range(n_boot)]
        ci = tuple(float(q) for q in np.nanquantile(boots, [0.025, 0.975]))
    else:
        ci = (np.nan, np.nan)
    half = values[: values.size // 2]
    moments = {}
    for p in moment_params:
        m1, s1 = _mean_se(moment_fn(half, p))
        m2, s2 = _mean_se(moment_fn(values, p))
        moments[float(p)] = {
            "half": m1, "half_se": s1, "full": m2, "full_se": s2,
            "stable": bool(abs(m1 - m2) <= 3 * np.hypot(s1, s2)) if np.isfinite(s1) and (s1 + s2) > 0 else bool(m1 == m2),
        }
    return TailDiagnostic(kind, values, r, ls, coef, ci, moments)


def _norm_chunk(ctx, eps, norm_opts, seed, start, count):
    xi = _noise(ctx, seed, start, count)
    est = model_norm_approx(xi, ctx.grid, ctx.mollifier, ctx.c_delta, eps=eps, **norm_opts)
    return {"z": est.combined}


def model_norm_samples(ctx, samples, seed, eps=1.0, norm_opts=None, chunk=DEFAULT_CHUNK, jobs=1):
    return _run_chunks(_norm_chunk, (ctx, eps, norm_opts or {}), samples, seed, chunk, jobs)["z"]


def fernique_tail(ctx: SolveContext, samples: int, seed: int, chi=(0.01, 0.05), eps: float = 1.0,
                  norm_opts: Optional[dict] = None, chunk: int = DEFAULT_CHUNK, jobs: int = 1) -> TailDiagnostic:
    """Gaussian-tail fit for the model-norm surrogate and ``E exp(chi ||Z||^2)``."""
    z = model_norm_samples(ctx, samples, seed, eps, norm_opts, chunk, jobs)
    return _tail_diagnostic(z, "gaussian", chi, lambda x, c: np.exp(c * x**2), seed=seed)


def q_integrability(F: Functional, ctx: SolveContext, h_star, samples: int, seed: int, p=(1.1,),
                    chunk: int = DEFAULT_CHUNK, jobs: int = 1) -> TailDiagnostic:
    """Exponential-tail fit for ``-Q/2`` and the moments ``E exp(-p Q/2)``."""
    out = coefficient_samples(F, ctx, h_star, 0, samples, seed, chunk, jobs)
    x = -0.5 * out["qhat"]
    return _tail_diagnostic(x, "exponential", p, lambda v, pp: np.exp(pp * v), seed=seed)
