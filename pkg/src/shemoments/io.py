"""Output formats: CSV with 17 significant digits, SHE1 binary fields, manifests."""
from __future__ import annotations

import csv
import json
import math
import struct
import subprocess
from pathlib import Path

import numpy as np

__all__ = [
    "fmt",
    "write_csv",
    "read_csv",
    "write_field_csv",
    "write_she1",
    "read_she1",
    "write_json",
    "write_manifest",
    "version_string",
]

MAGIC = b"SHE1"
VERSION = 1
_HEADER = struct.Struct("<4sIQQddd")


def fmt(v):
    """Lossless text form of a number (17 significant digits)."""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    if v is None:
        return ""
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]


def write_field_csv(path, ensemble):
    """Long-format rows (t, x, replicate, value) for every recorded step."""
    cfg = ensemble.config
    x = cfg.x

    def rows():
        for r, rep in enumerate(ensemble.replicates):
            for i, n in enumerate(ensemble.steps):
                t = n * cfg.dt
                for j in range(cfg.nx):
                    yield (t, x[j], int(rep), ensemble.values[r, i, j])

    return write_csv(path, ["t", "x", "replicate", "value"], rows())


def write_she1(path, values, dx, dt, nu):
    """Binary field: header then row-major little-endian float64 (nt rows of nx)."""
    values = np.ascontiguousarray(values, dtype="<f8")
    if values.ndim != 2:
        raise ValueError("values must be a 2-d (nt, nx) array")
    nt, nx = values.shape
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, nx, nt, float(dx), float(dt), float(nu)))
        fh.write(values.tobytes(order="C"))
    return path


def read_she1(path):
    """(values, header dict) from a SHE1 file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, nx, nt, dx, dt, nu = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a SHE1 file")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if data.size != nx * nt:
        raise ValueError(f"{path}: expected {nx * nt} values, found {data.size}")
    return data.reshape(nt, nx).astype(float), {"version": version, "nx": nx, "nt": nt,
                                                "dx": dx, "dt": dt, "nu": nu}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else fmt(v)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def version_string():
    """git-describe style version, falling back to the package version."""
    from . import __version__

    try:
        here = Path(__file__).resolve().parent
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def write_manifest(out_dir, command, config, seed=None, outputs=()):
    """manifest.json with everything needed to reproduce a run."""
    return write_json(Path(out_dir) / "manifest.json", {
        "command": command,
        "config": config,
        "seed": seed,
        "version": version_string(),
        "outputs": [str(Path(p).name) for p in outputs],
    })
