"""CSTD binary tensor dumps and sample-set directories.

Layout of a ``.cstd`` file (all integers little-endian)::

    0   4 bytes   magic b"CSTD"
    4   u32       format version (1)
    8   u8        dtype code (1 = float32, 2 = float64)
    9   u8        rank
    10  rank*u64  dimension sizes
    ..  payload   row-major little-endian scalars

A sample set is a directory holding ``manifest.json`` plus one stacked
``(N, ...)`` tensor file per role, and ``factors.csv`` when factors exist.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import struct
from pathlib import Path
from typing import Union

import numpy as np

from .errors import FormatError, InputError
from .tensor import ROLES, SampleSet, Tensor

MAGIC = b"CSTD"
VERSION = 1
DTYPE_CODES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
CODE_FOR = {np.dtype("float32"): 1, np.dtype("float64"): 2}
MANIFEST = "manifest.json"
FACTOR_NAMES = ("azimuth", "elevation", "red", "green", "blue")


def encode(arr: np.ndarray) -> bytes:
    arr = np.asarray(arr)
    code = CODE_FOR.get(arr.dtype)
    if code is None:
        raise FormatError(f"unsupported dtype {arr.dtype}", offset=8)
    if arr.ndim < 1 or arr.ndim > 255:
        raise FormatError(f"unsupported rank {arr.ndim}", offset=9)
    header = MAGIC + struct.pack("<IBB", VERSION, code, arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    payload = np.ascontiguousarray(arr, dtype=DTYPE_CODES[code]).tobytes()
    return header + payload


def decode(buf: bytes) -> np.ndarray:
    """Parse a CSTD byte string into a read-only array of the stored dtype."""
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise FormatError(f"bad magic {bytes(buf[:4])!r}", offset=0)
    if len(buf) < 8:
        raise FormatError("truncated version field", offset=len(buf))
    (version,) = struct.unpack_from("<I", buf, 4)
    if version != VERSION:
        raise FormatError(f"unsupported format version {version}", offset=4)
    if len(buf) < 10:
        raise FormatError("truncated header", offset=len(buf))
    code, rank = buf[8], buf[9]
    if code not in DTYPE_CODES:
        raise FormatError(f"unknown dtype code {code}", offset=8)
    if rank < 1:
        raise FormatError("rank must be >= 1", offset=9)
    dims_end = 10 + 8 * rank
    if len(buf) < dims_end:
        raise FormatError(
            f"truncated dimension table: need {dims_end} bytes", offset=len(buf)
        )
    shape = struct.unpack_from(f"<{rank}Q", buf, 10)
    for i, d in enumerate(shape):
        if d < 1:
            raise FormatError(f"dimension {i} has size {d}", offset=10 + 8 * i)
    dtype = DTYPE_CODES[code]
    count = int(np.prod(shape, dtype=np.uint64))
    end = dims_end + count * dtype.itemsize
    if len(buf) < end:
        have = (len(buf) - dims_end) // dtype.itemsize
        raise FormatError(
            f"truncated payload: declared {count} values, found {have}",
            offset=len(buf),
        )
    if len(buf) > end:
        raise FormatError(f"{len(buf) - end} trailing bytes after payload", offset=end)
    arr = np.frombuffer(buf, dtype=dtype, count=count, offset=dims_end)
    arr = arr.astype(dtype.newbyteorder("="), copy=False).reshape(shape)
    if not np.all(np.isfinite(arr)):
        raise InputError("payload contains NaN or Inf")
    return arr


def write_tensor(path, arr) -> None:
    if isinstance(arr, Tensor):
        arr = arr.data
    Path(path).write_bytes(encode(arr))


def read_tensor(path) -> np.ndarray:
    return decode(Path(path).read_bytes())


def write_dump(path, obj: Union[Tensor, SampleSet, np.ndarray]) -> None:
    """Write a tensor to a ``.cstd`` file or a sample set to a directory."""
    if isinstance(obj, SampleSet):
        write_sampleset(path, obj)
    else:
        write_tensor(path, obj)


def read_dump(path) -> Union[Tensor, SampleSet]:
    path = Path(path)
    if path.is_dir():
        return read_sampleset(path)
    return Tensor(read_tensor(path))


def write_sampleset(directory, ss: SampleSet, dtype=None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    members = {}
    for role in ss.roles():
        arr = getattr(ss, role)
        if dtype is not None and role != "factors":
            arr = arr.astype(dtype)
        name = f"{role}.cstd"
        write_tensor(directory / name, arr)
        members[role] = name
    if ss.factors is not None and ss.factors.shape[1] == len(FACTOR_NAMES):
        with open(directory / "factors.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(FACTOR_NAMES)
            for row in ss.factors:
                w.writerow([repr(float(v)) for v in row])
    manifest = {
        "format": "CSTD-SampleSet",
        "version": VERSION,
        "n": ss.n,
        "members": members,
        "meta": ss.meta,
    }
    (directory / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return directory


def read_manifest(directory) -> dict:
    p = Path(directory) / MANIFEST
    try:
        manifest = json.loads(p.read_text())
    except FileNotFoundError:
        raise FormatError(f"no {MANIFEST} in {directory}", offset=0) from None
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid manifest JSON: {e.msg}", offset=e.pos) from None
    unknown = set(manifest.get("members", {})) - set(ROLES)
    if unknown:
        raise FormatError(f"unknown member roles {sorted(unknown)}", offset=0)
    return manifest


def read_sampleset(directory, roles=None) -> SampleSet:
    directory = Path(directory)
    manifest = read_manifest(directory)
    kw = {}
    for role, name in manifest["members"].items():
        if roles is not None and role not in roles:
            continue
        kw[role] = read_tensor(directory / name)
    return SampleSet(**kw, meta=manifest.get("meta", {}))


def sampleset_digest(directory) -> str:
    """SHA-256 over the manifest and every member file, in sorted role order."""
    directory = Path(directory)
    manifest = read_manifest(directory)
    h = hashlib.sha256((directory / MANIFEST).read_bytes())
    for role in sorted(manifest["members"]):
        with open(directory / manifest["members"][role], "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                h.update(chunk)
    return h.hexdigest()


def array_digest(arr: np.ndarray) -> str:
    arr = np.ascontiguousarray(arr)
    h = hashlib.sha256(f"{arr.dtype.str}{arr.shape}".encode())
    h.update(arr.data)
    return h.hexdigest()


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
