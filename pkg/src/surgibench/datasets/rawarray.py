"""Zero-dependency raw array container.

Layout (little-endian): 16-byte header = magic b"SBAR", dtype code (u8),
rank (u8), 2 pad bytes, then 4 dims as u16 (unused dims are 1, trailing dims
beyond rank ignored on read). Body is the C-order array data.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"SBAR"
_HEADER = struct.Struct("<4sBBxx4H")

# u16 dims cap each dimension at 65535; wide enough for episodes and frames.
_DTYPES = {0: "<f4", 1: "<u1", 2: "<i4", 3: "<f8", 4: "<i8"}
_CODES = {np.dtype(v): k for k, v in _DTYPES.items()}


def write_array(path: str | Path, arr: np.ndarray) -> None:
    arr = np.ascontiguousarray(arr)
    code = _CODES.get(arr.dtype.newbyteorder("<"))
    if code is None:
        raise ValueError(f"unsupported dtype {arr.dtype}")
    if arr.ndim > 4:
        raise ValueError("rank > 4 unsupported")
    if any(d > 0xFFFF for d in arr.shape):
        raise ValueError(f"dimension too large for header: {arr.shape}")
    dims = list(arr.shape) + [1] * (4 - arr.ndim)
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, code, arr.ndim, *dims))
        f.write(arr.astype(_DTYPES[code]).tobytes(order="C"))


def read_array(path: str | Path) -> np.ndarray:
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
        magic, code, rank, *dims = _HEADER.unpack(header)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        shape = tuple(dims[:rank])
        data = f.read()
    arr = np.frombuffer(data, dtype=_DTYPES[code]).reshape(shape)
    return arr
