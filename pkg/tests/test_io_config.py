import json
import struct

import numpy as np
import pytest

from gpam_laplace import config as cfgmod
from gpam_laplace.config import ConfigError, load_config, parse_field
from gpam_laplace.io import (
    read_csv,
    read_field,
    read_json,
    read_trajectory,
    write_json,
    write_snapshot_csv,
    write_trajectory,
)
from gpam_laplace.spectral import TorusGrid

from conftest import cos_mode

GRID = TorusGrid(8)


def test_trajectory_round_trip_and_header(tmp_path):
    vals = np.random.default_rng(0).standard_normal((3, 8, 8))
    p = tmp_path / "t.bin"
    write_trajectory(p, vals, 0.25)
    raw = p.read_bytes()
    assert struct.unpack_from("<qqd", raw) == (8, 3, 0.25)
    assert len(raw) == 24 + 3 * 64 * 8
    back, T = read_trajectory(p)
    assert T == 0.25 and np.array_equal(back, vals)
    with pytest.raises(ValueError):
        write_trajectory(p, np.zeros((2, 3, 4)), 1.0)
    p.write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        read_trajectory(p)


def test_snapshot_csv_round_trip(tmp_path):
    f = np.random.default_rng(1).standard_normal(GRID.shape)
    p = tmp_path / "f.csv"
    write_snapshot_csv(p, f)
    header, rows = read_csv(p)
    assert header == ["x1", "x2", "value"] and len(rows) == 64
    assert rows[1][:2] == [0.0, 0.125]
    assert np.array_equal(read_field(p, 8), f)


def test_json_handles_numpy_and_non_finite(tmp_path):
    p = tmp_path / "r.json"
    write_json(p, {"a": np.arange(3), "b": np.float64(np.inf), "c": {1.5: np.bool_(True)}})
    assert read_json(p) == {"a": [0, 1, 2], "b": "inf", "c": {"1.5": True}}


def test_defaults_validate():
    cfg = load_config()
    assert cfg == cfgmod.validate(cfgmod.defaults())
    assert cfgmod.steps(cfg) == 128 and cfgmod.rho(cfg) == np.inf


def test_nested_file_and_overrides(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"grid": {"n": 16}, "mc.samples": 10}))
    cfg = load_config(p, ["time.T=0.2", "expansion.eps=[0.3, 0.1]", "model.g=rational", ("noise.seed", 4)])
    assert cfg["grid.n"] == 16 and cfg["mc.samples"] == 10 and cfg["time.T"] == 0.2
    assert cfg["expansion.eps"] == [0.3, 0.1] and cfg["model.g"] == "rational" and cfg["noise.seed"] == 4


@pytest.mark.parametrize(
    "override,fragment",
    [
        ("grid.nn=3", "grid.nn"),
        ("grid.n=15", "grid.n"),
        ("mc.samples=-1", "mc.samples"),
        ("time.dt=0.03", "time.dt"),
        ("expansion.eps=[2.0]", "expansion.eps"),
        ("nonsense", "key=value"),
    ],
)
def test_invalid_configs_name_the_key(override, fragment):
    with pytest.raises(ConfigError, match=fragment.replace(".", r"\.")):
        load_config(None, [override])


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)
    bad.write_text(json.dumps({"minimizer": {"tolerance": 1}}))
    with pytest.raises(ConfigError, match="minimizer.tolerance"):
        load_config(bad)


def test_named_fields():
    x1, x2 = GRID.coords
    f = parse_field("const:0.5+cos:2:1:0+sin:1:0:2", GRID)
    ref = 0.5 + 2 * np.cos(2 * np.pi * x1) + np.sin(4 * np.pi * x2)
    assert np.allclose(f, ref, atol=1e-15)
    assert not np.any(parse_field("zero", GRID))
    for bad in ("cos:1:0.5:0", "tan:1:1:0", "const:a", "const:1:2"):
        with pytest.raises(ConfigError):
            parse_field(bad, GRID)


def test_field_files(tmp_path):
    f = cos_mode(GRID)
    np.save(tmp_path / "f.npy", f)
    assert np.array_equal(parse_field(str(tmp_path / "f.npy"), GRID), f)
    with pytest.raises(ConfigError):
        parse_field(str(tmp_path / "g.npy"), GRID)
    np.save(tmp_path / "small.npy", np.zeros((4, 4)))
    with pytest.raises(ConfigError):
        parse_field(str(tmp_path / "small.npy"), GRID)
