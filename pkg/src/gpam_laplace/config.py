"""Run configuration: a JSON file of dotted keys plus ``--set`` overrides.

The file may be nested (``{"grid": {"n": 64}}``) or flat
(``{"grid.n": 64}``). Every key has a default and unknown keys are
rejected.

Fields (``model.u0``, ``model.h``, ``functional.psi``) are given either as a
path to a ``.npy``/``.csv`` file or as a ``+``-joined list of terms::

    zero | const:c | cos:a:k1:k2 | sin:a:k1:k2

where ``cos:a:k1:k2`` is ``a cos(2 pi (k1 x1 + k2 x2))``.
"""
import copy
import json
import math
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps it to exit code 2."""


def _pos_int(v):
    return isinstance(v, int) and not isinstance(v, bool) and v > 0


def _nonneg_int(v):
    return isinstance(v, int) and not isinstance(v, bool) and v >= 0


def _number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _pos(v):
    return _number(v) and v > 0


def _opt_pos(v):
    return v is None or _pos(v)


def _eps_list(v):
    return isinstance(v, list) and len(v) > 0 and all(_number(e) and 0 < e <= 1 for e in v)


def _pos_list(v):
    return isinstance(v, list) and all(_pos(e) for e in v)


def _rho(v):
    return v is None or v == "inf" or _pos(v)


def _str(v):
    return isinstance(v, str) and v != ""


# key -> (default, validator, description)
SCHEMA = {
    "grid.n": (32, _pos_int, "even grid size"),
    "time.T": (0.1, _pos, "final time"),
    "time.dt": (None, _opt_pos, "time step (default T/128)"),
    "noise.delta": (None, _opt_pos, "mollification scale (default 4/n)"),
    "noise.seed": (0, _nonneg_int, "root seed"),
    "model.g": ("cos", _str, "nonlinearity name"),
    "model.u0": ("const:0.2+cos:1:1:0", _str, "initial condition field"),
    "model.h": ("zero", _str, "shift used by simulate"),
    "functional.kind": ("terminal", _str, "terminal | constant | zero"),
    "functional.psi": ("const:10+cos:10:1:0", _str, "test field of the terminal functional"),
    "functional.profile": ("arctan", _str, "outer profile"),
    "functional.value": (0.0, _number, "value of a constant functional"),
    "expansion.N": (2, _nonneg_int, "highest coefficient a_N"),
    "expansion.eps": ([0.4, 0.2, 0.1, 0.05], _eps_list, "noise intensities"),
    "mc.samples": (2000, _pos_int, "Monte Carlo samples"),
    "mc.chunk": (500, _pos_int, "samples per vectorised batch"),
    "minimizer.tol": (1e-6, _pos, "relative gradient tolerance"),
    "minimizer.max_iter": (200, _pos_int, "iteration cap"),
    "norm.scales": (3, _pos_int, "dyadic scales in the model norm"),
    "norm.stride": (4, _pos_int, "base-point stride in the model norm"),
    "norm.rho": (None, _rho, "cut-off on eps*||Z||; null or \"inf\" disables it"),
    "tails.chi": ([0.01, 0.05], _pos_list, "exponents for E exp(chi ||Z||^2)"),
    "tails.p": ([1.1], _pos_list, "exponents for E exp(-p Q/2)"),
}


def defaults():
    return {k: copy.deepcopy(v[0]) for k, v in SCHEMA.items()}


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = prefix + str(k)
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_override(item: str):
    """``"key=value"`` with ``value`` parsed as JSON when possible."""
    if "=" not in item:
        raise ConfigError("override %r is not of the form key=value" % item)
    k, v = item.split("=", 1)
    return k.strip(), _parse_value(v.strip())


def validate(cfg: dict) -> dict:
    for key in cfg:
        if key not in SCHEMA:
            raise ConfigError("unknown config key %r" % key)
    for key, (_, ok, desc) in SCHEMA.items():
        if key not in cfg:
            raise ConfigError("missing config key %r" % key)
        v = cfg[key]
        if isinstance(v, int) and not isinstance(v, bool) and SCHEMA[key][1] in (_pos, _opt_pos, _number):
            v = cfg[key] = float(v)
        if not ok(v):
            raise ConfigError("invalid value %r for %r (%s)" % (v, key, desc))
    if cfg["grid.n"] % 2:
        raise ConfigError("'grid.n' must be even")
    dt = cfg["time.dt"]
    if dt is not None:
        steps = cfg["time.T"] / dt
        if abs(steps - round(steps)) > 1e-9 * steps:
            raise ConfigError("'time.dt' must divide 'time.T'")
    return cfg


def load_config(path=None, overrides=()) -> dict:
    """Defaults, then the file at ``path``, then ``key=value`` overrides."""
    cfg = defaults()
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError("config file %s not found" % path) from None
        except json.JSONDecodeError as e:
            raise ConfigError("config file %s is not valid JSON: %s" % (path, e)) from None
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg.update(_flatten(raw))
    for item in overrides:
        k, v = parse_override(item) if isinstance(item, str) else item
        if k not in SCHEMA:
            raise ConfigError("unknown config key %r" % k)
        cfg[k] = v
    return validate(cfg)


def steps(cfg) -> int:
    dt = cfg["time.dt"]
    return 128 if dt is None else int(round(cfg["time.T"] / dt))


def rho(cfg) -> float:
    r = cfg["norm.rho"]
    return math.inf if r in (None, "inf") else float(r)


# ------------------------------------------------------------------ fields


def parse_field(spec: str, grid, key="field"):
    """Evaluate a named field or load it from a file (see module docstring)."""
    spec = spec.strip()
    if spec.endswith(".npy") or spec.endswith(".csv"):
        from .io import read_field

        try:
            return read_field(spec, grid.n)
        except (OSError, ValueError) as e:
            raise ConfigError("%r: %s" % (key, e)) from None
    x1, x2 = grid.coords
    out = np.zeros(grid.shape)
    for term in spec.split("+"):
        parts = term.strip().split(":")
        name = parts[0]
        try:
            nums = [float(p) for p in parts[1:]]
        except ValueError:
            raise ConfigError("%r: bad number in term %r" % (key, term)) from None
        if name == "zero" and not nums:
            continue
        if name == "const" and len(nums) == 1:
            out += nums[0]
        elif name in ("cos", "sin") and len(nums) == 3:
            a, k1, k2 = nums
            if k1 != int(k1) or k2 != int(k2):
                raise ConfigError("%r: wavenumbers must be integers in %r" % (key, term))
            arg = 2 * np.pi * (k1 * x1 + k2 * x2)
            out += a * (np.cos(arg) if name == "cos" else np.sin(arg))
        else:
            raise ConfigError("%r: cannot parse term %r" % (key, term))
    return out
