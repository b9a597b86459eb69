"""Binary cube/map files and CSV outputs.

Layout (little-endian):

    bytes 0..63   fixed header
        0   magic       4s   b"CCVR"
        4   version     u8   1
        5   kind        u8   1 = data cube, 2 = integration map
        6   dtype       u8   1 = interleaved float32 complex (complex64)
        7   ndim        u8   number of axes (2..4)
        8   dims        4*u32  axis lengths, unused entries 0
        24  method_tag  16s  NUL-padded ASCII ("raw", "compressed",
                             "arem_grft", "poly_grft2", "mtd", ...)
        40  config_hash 16s  first 16 bytes of the SHA-256 of the config file
        56  reserved    8s   zeros
    then ndim axis records of 32 bytes each
        0   name   16s  NUL-padded ASCII
        16  start  f64
        24  step   f64
    then the payload: complex64 values in C (row-major) order.

Cubes store axes ("slow_time", 0, 1/prf) and ("range", start, bin); maps
store one record per search axis.  NaN marks invalid map cells.  Writes are
atomic (temp file + rename) and round-trip bit-exactly.
"""
from __future__ import annotations

import hashlib
import os
import struct
import tempfile

import numpy as np

from .echo import DataCube
from .grids import Axis, IntegrationMap

MAGIC = b"CCVR"
VERSION = 1
KIND_CUBE = 1
KIND_MAP = 2
DTYPE_C64 = 1

_HEADER = struct.Struct("<4sBBBB4I16s16s8s")
_AXIS = struct.Struct("<16sdd")
ZERO_HASH = b"\x00" * 16


def config_hash(config_bytes: bytes) -> bytes:
    return hashlib.sha256(config_bytes).digest()[:16]


def _atomic_write(path: str, blob: bytes):
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".ccvr-tmp-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _pack(kind: int, method_tag: str, axes: list[tuple[str, float, float]],
          shape: tuple[int, ...], values: np.ndarray, cfg_hash: bytes) -> bytes:
    if len(shape) > 4:
        raise ValueError("at most 4 axes are supported by the file format")
    dims = list(shape) + [0] * (4 - len(shape))
    tag = method_tag.encode("ascii")
    if len(tag) > 16:
        raise ValueError(f"method_tag too long for header: {method_tag!r}")
    if len(cfg_hash) != 16:
        raise ValueError("config hash must be 16 bytes")
    header = _HEADER.pack(MAGIC, VERSION, kind, DTYPE_C64, len(shape),
                          *dims, tag.ljust(16, b"\x00"), cfg_hash, b"\x00" * 8)
    blocks = [header]
    for name, start, step in axes:
        n = name.encode("ascii")
        if len(n) > 16:
            raise ValueError(f"axis name too long for file format: {name!r}")
        blocks.append(_AXIS.pack(n.ljust(16, b"\x00"), start, step))
    payload = np.ascontiguousarray(values, dtype="<c8").tobytes()
    blocks.append(payload)
    return b"".join(blocks)


def _unpack(blob: bytes):
    magic, version, kind, dtype, ndim, d0, d1, d2, d3, tag, cfg_hash, _ = \
        _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise ValueError("not a ccvradar file (bad magic)")
    if version != VERSION:
        raise ValueError(f"unsupported file version {version}")
    if dtype != DTYPE_C64:
        raise ValueError(f"unsupported dtype code {dtype}")
    dims = [d for d in (d0, d1, d2, d3)][:ndim]
    axes = []
    off = _HEADER.size
    for _ in range(ndim):
        name, start, step = _AXIS.unpack_from(blob, off)
        axes.append((name.rstrip(b"\x00").decode("ascii"), start, step))
        off += _AXIS.size
    count = int(np.prod(dims))
    values = np.frombuffer(blob, dtype="<c8", count=count, offset=off)
    values = values.reshape(dims).astype(np.complex128)
    tag_s = tag.rstrip(b"\x00").decode("ascii")
    return kind, tag_s, axes, values, cfg_hash


def write_cube(path: str, cube: DataCube, cfg_hash: bytes = ZERO_HASH):
    axes = [("slow_time", 0.0, 1.0 / cube.prf),
            ("range", cube.range_axis_start, cube.range_bin)]
    blob = _pack(KIND_CUBE, cube.domain_tag, axes, cube.samples.shape,
                 cube.samples, cfg_hash)
    _atomic_write(path, blob)


def read_cube(path: str) -> tuple[DataCube, bytes]:
    with open(path, "rb") as f:
        blob = f.read()
    kind, tag, axes, values, cfg_hash = _unpack(blob)
    if kind != KIND_CUBE:
        raise ValueError(f"{path} is not a cube file")
    names = [a[0] for a in axes]
    if names != ["slow_time", "range"]:
        raise ValueError(f"unexpected cube axes {names}")
    prf = 1.0 / axes[0][2]
    cube = DataCube(values, axes[1][1], axes[1][2], prf, tag)
    return cube, cfg_hash


def write_map(path: str, imap: IntegrationMap, cfg_hash: bytes = ZERO_HASH):
    axes = [(ax.name, ax.start, ax.step) for ax in imap.axes]
    blob = _pack(KIND_MAP, imap.method_tag, axes, imap.values.shape,
                 imap.values, cfg_hash)
    _atomic_write(path, blob)


def read_map(path: str) -> tuple[IntegrationMap, bytes]:
    with open(path, "rb") as f:
        blob = f.read()
    kind, tag, axes, values, cfg_hash = _unpack(blob)
    if kind != KIND_MAP:
        raise ValueError(f"{path} is not a map file")
    ax = tuple(Axis(name, start, step, n)
               for (name, start, step), n in zip(axes, values.shape))
    return IntegrationMap(values, ax, tag), cfg_hash


def write_slice_csv(path: str, row_axis: Axis, col_axis: Axis,
                    magnitudes: np.ndarray, cfg_hash: bytes | None = None,
                    header_comment: str = "", db: bool = False):
    """2-D magnitude slice as CSV: first row/column carry axis values.

    Invalid (NaN) cells are written as empty fields.
    """
    lines = []
    if header_comment:
        lines.append(f"# {header_comment}")
    if cfg_hash is not None:
        lines.append(f"# config_sha256_16={cfg_hash.hex()}")
    lines.append(",".join([f"{row_axis.name}\\{col_axis.name}"]
                          + [repr(float(v)) for v in col_axis.values()]))
    vals = magnitudes
    if db:
        with np.errstate(divide="ignore"):
            vals = 20.0 * np.log10(np.abs(magnitudes))
    for i, rv in enumerate(row_axis.values()):
        cells = [repr(float(rv))]
        for j in range(col_axis.count):
            x = vals[i, j]
            cells.append("" if not np.isfinite(x) else repr(float(x)))
        lines.append(",".join(cells))
    _atomic_write(path, ("\n".join(lines) + "\n").encode())


def write_pd_csv(path: str, curves: dict, cfg_hash: bytes | None = None):
    """Pd curves as CSV: snr_db column plus one pd column per method."""
    names = list(curves)
    snrs = sorted({float(s) for c in curves.values() for s in c.snr_db})
    lookup = {name: {float(s): p for s, p in zip(c.snr_db, c.pd)}
              for name, c in curves.items()}
    lines = []
    if cfg_hash is not None:
        lines.append(f"# config_sha256_16={cfg_hash.hex()}")
    first = next(iter(curves.values()))
    lines.append(f"# trials={first.trials} pfa={first.pfa} "
                 f"match_cells={first.match_cells}")
    lines.append(",".join(["snr_db"] + names))
    for s in snrs:
        row = [repr(float(s))]
        for name in names:
            v = lookup[name].get(s)
            row.append("" if v is None else repr(float(v)))
        lines.append(",".join(row))
    _atomic_write(path, ("\n".join(lines) + "\n").encode())
