"""Command-line interface: ``gpam-laplace {simulate,minimize,expand,compare,tails}``.

Exit codes: 0 success, 2 configuration error, 3 numerical fault.
"""
import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from .config import ConfigError
from .estimators import COMPARE_COLUMNS, expansion_compare, fernique_tail, mc_coeff, q_integrability
from .functionals import builtin_functional
from .io import read_json, write_csv, write_json, write_npy, write_snapshot_csv, write_trajectory
from .minimizer import minimize, nondegeneracy_probe
from .noise import sample_white_noise
from .solvers import NumericalFault, make_context, solve_shifted
from .spectral import ExplodedFieldError

log = logging.getLogger("gpam_laplace")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


# ----------------------------------------------------------------- building


def build_problem(cfg):
    """``(ctx, F)`` from a validated config."""
    n = cfg["grid.n"]
    T = cfg["time.T"]
    dt = T / cfgmod.steps(cfg)
    try:
        ctx = make_context(n=n, T=T, dt=dt, g=cfg["model.g"], delta=cfg["noise.delta"])
    except ValueError as e:
        raise ConfigError(str(e)) from None
    u0 = cfgmod.parse_field(cfg["model.u0"], ctx.grid, "model.u0")
    ctx = replace(ctx, u0=u0)
    psi = None
    if cfg["functional.kind"] == "terminal":
        psi = cfgmod.parse_field(cfg["functional.psi"], ctx.grid, "functional.psi")
    try:
        F = builtin_functional(cfg["functional.kind"], ctx.grid, psi, cfg["functional.profile"], cfg["functional.value"])
    except ValueError as e:
        raise ConfigError(str(e)) from None
    return ctx, F


def _norm_opts(cfg):
    return {"scales": cfg["norm.scales"], "stride": cfg["norm.stride"]}


class _Run:
    """Collects outputs and timings, then merges them into ``manifest.json``."""

    def __init__(self, command, cfg, out, argv):
        self.command = command
        self.cfg = cfg
        self.out = Path(out)
        self.argv = list(argv)
        self.outputs = []
        self.extra = {}
        self.t0 = time.perf_counter()

    def path(self, name):
        p = self.out / name
        self.outputs.append(name)
        return p

    def finish(self):
        manifest_path = self.out / "manifest.json"
        manifest = read_json(manifest_path) if manifest_path.exists() else {"runs": {}}
        manifest["code_version"] = __version__
        manifest["runs"][self.command] = {
            "argv": self.argv,
            "config": self.cfg,
            "seed": self.cfg["noise.seed"],
            "outputs": self.outputs,
            "wall_time_s": time.perf_counter() - self.t0,
            **self.extra,
        }
        write_json(manifest_path, manifest)


# ----------------------------------------------------------------- commands


def cmd_simulate(cfg, run, eps=0.0, jobs=1):
    if not 0.0 <= eps <= 1.0:
        raise ConfigError("--eps must lie in [0, 1]")
    ctx, _ = build_problem(cfg)
    h = cfgmod.parse_field(cfg["model.h"], ctx.grid, "model.h")
    xi = sample_white_noise(ctx.grid, cfg["noise.seed"])
    u = solve_shifted(ctx, h, eps, xi, save=True)
    exploded = bool(np.any(u.exploded))
    write_trajectory(run.path("trajectory.bin"), u.values, ctx.T)
    write_snapshot_csv(run.path("final.csv"), u.final)
    run.extra.update({"eps": eps, "exploded": exploded})
    if exploded:
        log.warning("solution left the finite range before T")
    return {"exploded": exploded}


def _minimize(cfg, ctx, F):
    res = minimize(F, ctx, tol=cfg["minimizer.tol"], max_iter=cfg["minimizer.max_iter"])
    res.probe_quotients = nondegeneracy_probe(F, ctx, res.h_star)
    return res


def cmd_minimize(cfg, run, jobs=1):
    ctx, F = build_problem(cfg)
    res = _minimize(cfg, ctx, F)
    write_npy(run.path("h_star.npy"), res.h_star)
    write_json(run.path("minimizer.json"), res.to_json("h_star.npy"))
    return res


def cmd_expand(cfg, run, jobs=1):
    ctx, F = build_problem(cfg)
    res = _minimize(cfg, ctx, F)
    N = cfg["expansion.N"]
    est = mc_coeff(F, ctx, res.h_star, N, cfg["mc.samples"], cfg["noise.seed"], cfg["mc.chunk"], jobs)
    report = {
        "F_h_star": res.value,
        "N": N,
        "a": list(est.a),
        "a_se": list(est.se),
        "samples": cfg["mc.samples"],
        "seed": cfg["noise.seed"],
        "minimizer": res.to_json(),
    }
    write_json(run.path("expansion.json"), report)
    return report


def cmd_compare(cfg, run, jobs=1):
    ctx, F = build_problem(cfg)
    res = _minimize(cfg, ctx, F)
    rep = expansion_compare(F, ctx, res.h_star, cfg["expansion.eps"], cfg["expansion.N"],
                            cfg["mc.samples"], cfg["noise.seed"], cfg["mc.chunk"], jobs)
    write_csv(run.path("compare.csv"), COMPARE_COLUMNS, ([r[c] for c in COMPARE_COLUMNS] for r in rep.rows))
    varadhan = []
    for r in rep.rows:
        with np.errstate(divide="ignore"):
            v = r["eps"] ** 2 * np.log(r["scaled_shifted"])
        varadhan.append({"eps": r["eps"], "value": v})
    out = rep.to_json()
    out["varadhan"] = varadhan
    write_json(run.path("compare.json"), out)
    return rep


def cmd_tails(cfg, run, jobs=1):
    ctx, F = build_problem(cfg)
    samples, seed = cfg["mc.samples"], cfg["noise.seed"]
    z = fernique_tail(ctx, samples, seed, chi=cfg["tails.chi"], norm_opts=_norm_opts(cfg),
                      chunk=cfg["mc.chunk"], jobs=jobs)
    res = _minimize(cfg, ctx, F)
    q = q_integrability(F, ctx, res.h_star, samples, seed, p=cfg["tails.p"], chunk=cfg["mc.chunk"], jobs=jobs)
    write_csv(run.path("tails_norm.csv"), ("r", "log_survival"), z.survival_table())
    write_csv(run.path("tails_q.csv"), ("r", "log_survival"), q.survival_table())
    summary = {}
    for name, d in (("model_norm", z), ("q", q)):
        summary[name] = {"kind": d.kind, "coef": d.coef, "coef_ci": list(d.coef_ci), "moments": d.moments}
    write_json(run.path("tails.json"), summary)
    return summary


COMMANDS = {
    "simulate": cmd_simulate,
    "minimize": cmd_minimize,
    "expand": cmd_expand,
    "compare": cmd_compare,
    "tails": cmd_tails,
}


# --------------------------------------------------------------------- main


def make_parser():
    p = argparse.ArgumentParser(prog="gpam-laplace", description="Laplace asymptotics for the generalised parabolic Anderson model.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", metavar="PATH", help="JSON config file")
        s.add_argument("--set", metavar="K=V", action="append", default=[], dest="overrides",
                       help="override one config key (repeatable)")
        s.add_argument("--jobs", type=int, default=1, help="worker processes")
        s.add_argument("--out", metavar="DIR", default="out", help="output directory")
        s.add_argument("--seed", type=int, help="root seed (overrides noise.seed)")
        s.add_argument("-v", "--verbose", action="store_true")
        if name == "simulate":
            s.add_argument("--eps", type=float, default=0.0, help="noise intensity")
    return p


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        overrides = list(args.overrides)
        if args.seed is not None:
            overrides.append(("noise.seed", args.seed))
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        cfg = cfgmod.load_config(args.config, overrides)
        run = _Run(args.command, cfg, args.out, argv)
        kwargs = {"jobs": args.jobs}
        if args.command == "simulate":
            kwargs["eps"] = args.eps
        COMMANDS[args.command](cfg, run, **kwargs)
        run.finish()
    except ConfigError as e:
        print("config error: %s" % e, file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFault, ExplodedFieldError, FloatingPointError) as e:
        print("numerical fault: %s" % e, file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
