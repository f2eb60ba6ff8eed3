"""Binary grid files, JSON summaries and CSV tables.

A grid file is ``MAGIC``, an 8-byte little-endian header length, a JSON
header (domain, field names, dtype, free-form metadata) and the fields as
contiguous little-endian arrays in header order.  All writers go through a
temporary file in the target directory followed by ``os.replace``.
"""

from __future__ import annotations

import csv
import io
import json
import os
import struct
import tempfile

import numpy as np

from .grid import GridDomain

__all__ = ["save_grid", "load_grid", "save_rotation", "load_rotation", "write_json",
           "write_csv", "atomic_write", "dumps"]

MAGIC = b"SHAPELAB-GRID\n"


def atomic_write(path, data: bytes) -> str:
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if x != x:
            return "nan"
        if x in (float("inf"), float("-inf")):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, fixed indentation, no NaN literals."""
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> str:
    return atomic_write(path, dumps(obj).encode())


def write_csv(path, header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return atomic_write(path, buf.getvalue().encode())


def save_grid(path, fields: dict, domain: GridDomain, meta=None) -> str:
    """Write named arrays on ``domain`` (real or complex, grid-shaped or with trailing axes)."""
    names = list(fields)
    arrays = [np.asarray(fields[k]) for k in names]
    cplx = any(np.iscomplexobj(a) for a in arrays)
    dt = np.dtype("<c16" if cplx else "<f8")
    for k, a in zip(names, arrays):
        if a.shape[:domain.dim] != domain.shape:
            raise ValueError(f"field {k!r} of shape {a.shape} does not live on grid {domain.shape}")
    header = {
        "format": 1,
        "domain": domain.meta(),
        "dtype": dt.str,
        "fields": [{"name": k, "shape": list(a.shape)} for k, a in zip(names, arrays)],
        "meta": _jsonable(meta or {}),
    }
    hb = json.dumps(header, sort_keys=True).encode()
    parts = [MAGIC, struct.pack("<Q", len(hb)), hb]
    parts += [np.ascontiguousarray(a, dtype=dt).tobytes() for a in arrays]
    return atomic_write(path, b"".join(parts))


def load_grid(path):
    """``(domain, fields, meta)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if not raw.startswith(MAGIC):
        raise ValueError(f"{path}: not a shapelab grid file")
    off = len(MAGIC)
    (hl,) = struct.unpack("<Q", raw[off:off + 8])
    off += 8
    header = json.loads(raw[off:off + hl])
    off += hl
    d = header["domain"]
    dom = GridDomain(tuple(d["start"]), tuple(d["stop"]), tuple(d["N"]))
    dt = np.dtype(header["dtype"])
    fields = {}
    for f in header["fields"]:
        shape = tuple(f["shape"])
        count = int(np.prod(shape))
        fields[f["name"]] = np.frombuffer(raw, dtype=dt, count=count, offset=off).reshape(shape).copy()
        off += count * dt.itemsize
    if off != len(raw):
        raise ValueError(f"{path}: {len(raw) - off} trailing bytes")
    return dom, fields, header["meta"]


def save_rotation(path, rd, extra_meta=None) -> str:
    """Persist Lame and rotation coefficients; ``eta`` goes into the header."""
    fields = {f"H{i + 1}": h for i, h in enumerate(rd.H)}
    fields.update({f"beta{i + 1}{j + 1}": b for (i, j), b in sorted(rd.beta.items())})
    meta = {"kind": "rotation", "eta": [str(e) for e in rd.eta]}
    meta.update(extra_meta or {})
    return save_grid(path, fields, rd.domain, meta)


def load_rotation(path):
    from .lame import RotationData

    dom, f, meta = load_grid(path)
    if meta.get("kind") != "rotation":
        raise ValueError(f"{path}: not a rotation-data grid")
    n = dom.dim
    H = tuple(f[f"H{i + 1}"] for i in range(n))
    beta = {(i, j): f[f"beta{i + 1}{j + 1}"] for i in range(n) for j in range(n) if i != j}
    return RotationData(H, beta, tuple(meta["eta"]), dom, meta={"source": os.fspath(path)})
