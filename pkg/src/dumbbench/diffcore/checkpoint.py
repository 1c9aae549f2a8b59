"""Flat binary parameter container.

Layout (all integers little-endian)::

    b"DMB1"  uint32 tensor_count
    repeat tensor_count times:
        uint16 name_length, name (utf-8)
        uint8  ndim, uint32 dims[ndim]
        float32 values[prod(dims)]   (row-major, little-endian)
"""
from __future__ import annotations

import hashlib
import io
import struct
from pathlib import Path
from typing import Dict, Mapping, Union

import numpy as np

from ..errors import CheckpointError

MAGIC = b"DMB1"


def dumps(params: Mapping[str, np.ndarray]) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", len(params)))
    for name, value in params.items():
        arr = np.ascontiguousarray(value, dtype="<f4")
        if not np.all(np.isfinite(arr)):
            raise CheckpointError(f"parameter {name!r} has non-finite values")
        encoded = name.encode("utf-8")
        buf.write(struct.pack("<H", len(encoded)))
        buf.write(encoded)
        buf.write(struct.pack("<B", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        buf.write(arr.tobytes())
    return buf.getvalue()


def loads(blob: bytes) -> Dict[str, np.ndarray]:
    view = memoryview(blob)
    if bytes(view[:4]) != MAGIC:
        raise CheckpointError("bad magic")
    pos = 4
    try:
        (count,) = struct.unpack_from("<I", view, pos)
        pos += 4
        out: Dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", view, pos)
            pos += 2
            name = bytes(view[pos : pos + name_len]).decode("utf-8")
            pos += name_len
            (ndim,) = struct.unpack_from("<B", view, pos)
            pos += 1
            shape = struct.unpack_from(f"<{ndim}I", view, pos)
            pos += 4 * ndim
            size = int(np.prod(shape, dtype=np.int64))
            if pos + 4 * size > len(view):
                raise CheckpointError(f"truncated data for {name!r}")
            arr = np.frombuffer(view, dtype="<f4", count=size, offset=pos).reshape(shape).astype(np.float32)
            pos += 4 * size
            out[name] = arr
    except struct.error as exc:
        raise CheckpointError(f"truncated header: {exc}") from exc
    if pos != len(view):
        raise CheckpointError("trailing bytes after last tensor")
    return out


def save(path: Union[str, Path], params: Mapping[str, np.ndarray]) -> None:
    Path(path).write_bytes(dumps(params))


def load(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    return loads(Path(path).read_bytes())


def parameter_hash(params: Mapping[str, np.ndarray]) -> str:
    return hashlib.sha256(dumps(params)).hexdigest()
