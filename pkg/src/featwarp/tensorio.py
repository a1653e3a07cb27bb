"""Binary tensor container (".fwt") used for every array exchanged on disk.

Byte layout, in order:

    offset  size          field
    0       4             magic, ASCII "FWT1"
    4       1             ndim, unsigned 8-bit, must be 1, 2 or 3
    5       4 * ndim      dims, unsigned 32-bit little-endian
    5+4n    1             dtype tag, 0 = float32 (only supported value)
    6+4n    4 * prod(dims) payload, row-major little-endian float32

A dim may be zero (empty tensor) but a dimensionless tensor is rejected.
The product of dims must fit in 32 bits. Serialization is deterministic:
identical arrays produce identical bytes.
"""

from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np

from .errors import (
    BadMagicError,
    TensorSizeError,
    TruncatedPayloadError,
    UnsupportedDtypeError,
)

MAGIC = b"FWT1"
DTYPE_FLOAT32 = 0
MAX_ELEMENTS = 2**32 - 1


def _check_dims(dims: tuple[int, ...]) -> None:
    if len(dims) not in (1, 2, 3):
        raise TensorSizeError(f"ndim must be 1, 2 or 3, got {len(dims)}")
    if any(d > MAX_ELEMENTS for d in dims):
        raise TensorSizeError(f"dim exceeds 32-bit range: {dims}")
    n = 1
    for d in dims:
        n *= d
    if n > MAX_ELEMENTS:
        raise TensorSizeError(f"element count {n} overflows 32 bits")


def write_tensor(array: np.ndarray) -> bytes:
    """Serialize a float-convertible array to .fwt bytes."""
    data = np.asarray(array, dtype="<f4", order="C")
    dims = data.shape
    _check_dims(dims)
    header = MAGIC + struct.pack("<B", data.ndim)
    header += struct.pack(f"<{data.ndim}I", *dims)
    header += struct.pack("<B", DTYPE_FLOAT32)
    return header + data.tobytes()


def read_tensor(stream: BinaryIO | bytes) -> np.ndarray:
    """Parse .fwt bytes (or a readable binary stream) into a float32 array."""
    if isinstance(stream, (bytes, bytearray)):
        buf = bytes(stream)
    else:
        buf = stream.read()
    if len(buf) < 5 or buf[:4] != MAGIC:
        raise BadMagicError(f"expected magic {MAGIC!r}, got {buf[:4]!r}")
    ndim = buf[4]
    if ndim not in (1, 2, 3):
        raise TensorSizeError(f"ndim must be 1, 2 or 3, got {ndim}")
    header_end = 5 + 4 * ndim + 1
    if len(buf) < header_end:
        raise TruncatedPayloadError("stream ends inside the header")
    dims = struct.unpack(f"<{ndim}I", buf[5 : 5 + 4 * ndim])
    _check_dims(dims)
    dtype_tag = buf[5 + 4 * ndim]
    if dtype_tag != DTYPE_FLOAT32:
        raise UnsupportedDtypeError(f"dtype tag {dtype_tag} not supported (0 = float32)")
    n = 1
    for d in dims:
        n *= d
    expected = header_end + 4 * n
    if len(buf) < expected:
        raise TruncatedPayloadError(
            f"payload needs {4 * n} bytes, only {len(buf) - header_end} present"
        )
    if len(buf) > expected:
        raise TruncatedPayloadError(f"{len(buf) - expected} trailing bytes after payload")
    flat = np.frombuffer(buf, dtype="<f4", count=n, offset=header_end)
    return flat.reshape(dims).copy()


def write_tensor_file(path, array: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(write_tensor(array))


def read_tensor_file(path) -> np.ndarray:
    with open(path, "rb") as f:
        return read_tensor(f)
