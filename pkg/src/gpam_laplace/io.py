"""On-disk formats: binary trajectories, CSV tables, JSON reports, manifests.

Binary trajectory layout (little-endian)::

    int64 n, int64 M, float64 T, then M*n*n float64 values, row-major,
    snapshot by snapshot.
"""
import csv
import io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<qqd")


def _atomic_write(path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_npy(path, array):
    """Atomic ``np.save``."""
    buf = io.BytesIO()
    np.save(buf, np.asarray(array))
    _atomic_write(path, buf.getvalue())


def write_trajectory(path, values, T: float):
    """Write snapshots ``values`` of shape ``(M, n, n)``."""
    values = np.asarray(values, dtype="<f8")
    if values.ndim != 3 or values.shape[1] != values.shape[2]:
        raise ValueError("trajectory must have shape (M, n, n)")
    M, n, _ = values.shape
    _atomic_write(path, _HEADER.pack(n, M, float(T)) + np.ascontiguousarray(values).tobytes())


def read_trajectory(path):
    """Return ``(values, T)``."""
    raw = Path(path).read_bytes()
    n, M, T = _HEADER.unpack_from(raw)
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != M * n * n:
        raise ValueError("corrupt trajectory file %s" % path)
    return body.reshape(M, n, n).astype(float), T


def _csv_bytes(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue().encode()


def write_csv(path, header, rows):
    _atomic_write(path, _csv_bytes(header, rows))


def read_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [[float(x) for x in row] for row in r]
    return header, rows


def write_snapshot_csv(path, field):
    """One field as ``x1,x2,value`` rows on the grid points ``i/n``."""
    field = np.asarray(field, dtype=float)
    n = field.shape[0]
    rows = ((i / n, j / n, field[i, j]) for i in range(n) for j in range(n))
    write_csv(path, ("x1", "x2", "value"), rows)


def read_field(path, n=None):
    """Load a field from ``.npy`` or from a CSV written by :func:`write_snapshot_csv`."""
    path = Path(path)
    if path.suffix == ".npy":
        f = np.load(path)
    elif path.suffix == ".csv":
        _, rows = read_csv(path)
        rows = np.asarray(rows)
        m = int(round(np.sqrt(len(rows))))
        if m * m != len(rows):
            raise ValueError("%s does not hold a square grid" % path)
        f = np.empty((m, m))
        idx = np.rint(rows[:, :2] * m).astype(int) % m
        f[idx[:, 0], idx[:, 1]] = rows[:, 2]
    else:
        raise ValueError("unsupported field file %s (use .npy or .csv)" % path)
    if n is not None and f.shape != (n, n):
        raise ValueError("field in %s has shape %s, expected (%d, %d)" % (path, f.shape, n, n))
    return np.asarray(f, dtype=float)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else repr(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj):
    _atomic_write(path, (json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n").encode())


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
