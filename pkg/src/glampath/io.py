"""On-disk formats: binary array files and headerless CSV matrices.

Array file layout (all little-endian)::

    b"GLAM" | version u16 | ndim u16 | dims u64 * ndim | float64 payload

The payload is the column-major flattening of the array.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"GLAM"
VERSION = 1


class ArrayFormatError(ValueError):
    pass


def encode_array(arr) -> bytes:
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    head = MAGIC + struct.pack("<HH", VERSION, arr.ndim)
    head += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    return head + arr.astype("<f8").tobytes(order="F")


def decode_array(buf: bytes) -> np.ndarray:
    if len(buf) < 8 or buf[:4] != MAGIC:
        raise ArrayFormatError("not a GLAM array file (bad magic)")
    version, ndim = struct.unpack_from("<HH", buf, 4)
    if version != VERSION:
        raise ArrayFormatError(f"unsupported array file version {version}")
    off = 8 + 8 * ndim
    if len(buf) < off:
        raise ArrayFormatError("truncated header")
    dims = struct.unpack_from(f"<{ndim}Q", buf, 8)
    count = int(np.prod(dims)) if ndim else 0
    if len(buf) - off != 8 * count:
        raise ArrayFormatError(
            f"payload has {len(buf) - off} bytes, expected {8 * count} for dims {dims}")
    flat = np.frombuffer(buf, dtype="<f8", offset=off, count=count)
    return flat.astype(float).reshape(dims, order="F")


def write_array(path, arr) -> None:
    Path(path).write_bytes(encode_array(arr))


def read_array(path) -> np.ndarray:
    return decode_array(Path(path).read_bytes())


def write_matrix_csv(path, M) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    np.savetxt(path, M, delimiter=",", fmt="%.17g")


def read_matrix_csv(path) -> np.ndarray:
    M = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    if M.size == 0:
        raise ValueError(f"{path}: empty matrix")
    return M
