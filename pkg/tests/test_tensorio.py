"""Byte-level tests for the .fwt tensor container."""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import pytest

from featwarp import (
    BadMagicError,
    TensorSizeError,
    TruncatedPayloadError,
    UnsupportedDtypeError,
    read_tensor,
    read_tensor_file,
    write_tensor,
)

FIXTURE = Path(__file__).parent / "fixtures" / "fixture_1x2x2.fwt"


def test_minimal_header_layout():
    blob = write_tensor(np.zeros((1,), dtype=np.float32))
    # magic + ndim + one dim + dtype tag + one float
    assert len(blob) == 4 + 1 + 4 + 1 + 4
    assert blob == b"FWT1" + struct.pack("<B", 1) + struct.pack("<I", 1) + b"\x00" + b"\x00" * 4


def test_fixture_bytes_match_hand_assembly():
    expected = (
        b"FWT1"
        + struct.pack("<B", 3)
        + struct.pack("<3I", 1, 2, 2)
        + struct.pack("<B", 0)
        + struct.pack("<4f", 1.0, 2.0, 3.0, 4.0)
    )
    assert FIXTURE.read_bytes() == expected
    arr = read_tensor_file(FIXTURE)
    assert arr.shape == (1, 2, 2)
    np.testing.assert_array_equal(arr, [[[1.0, 2.0], [3.0, 4.0]]])
    assert write_tensor(arr) == expected


def test_round_trip_random_tensors(rng):
    for _ in range(50):
        ndim = int(rng.integers(1, 4))
        dims = tuple(int(rng.integers(1, 7)) for _ in range(ndim))
        arr = rng.normal(size=dims).astype(np.float32)
        blob = write_tensor(arr)
        back = read_tensor(blob)
        np.testing.assert_array_equal(back, arr)
        assert write_tensor(back) == blob


def test_serialization_deterministic(rng):
    arr = rng.normal(size=(3, 4, 5)).astype(np.float32)
    assert write_tensor(arr) == write_tensor(arr.copy())


def test_channel_ordering_row_major(rng):
    arr = rng.normal(size=(2, 3, 4)).astype(np.float32)
    blob = write_tensor(arr)
    payload = np.frombuffer(blob, dtype="<f4", offset=4 + 1 + 12 + 1)
    c, h, w = 1, 2, 3
    assert payload[c * 12 + h * 4 + w] == arr[c, h, w]


def test_zero_length_dim_round_trips():
    arr = np.zeros((0, 9), dtype=np.float32)
    back = read_tensor(write_tensor(arr))
    assert back.shape == (0, 9)


def test_scalar_and_high_rank_rejected():
    with pytest.raises(TensorSizeError):
        write_tensor(np.float32(5.0))
    with pytest.raises(TensorSizeError):
        write_tensor(np.zeros((1, 1, 1, 1), dtype=np.float32))


def test_dims_product_overflow_rejected():
    header = b"FWT1" + struct.pack("<B", 2) + struct.pack("<2I", 70000, 70000) + b"\x00"
    with pytest.raises(TensorSizeError):
        read_tensor(header)


def test_bad_magic():
    with pytest.raises(BadMagicError):
        read_tensor(b"NOPE" + b"\x00" * 16)
    with pytest.raises(BadMagicError):
        read_tensor(b"FW")


def test_unsupported_dtype_tag():
    blob = bytearray(write_tensor(np.zeros((2,), dtype=np.float32)))
    blob[4 + 1 + 4] = 7
    with pytest.raises(UnsupportedDtypeError):
        read_tensor(bytes(blob))


def test_truncated_and_oversized_payloads():
    blob = write_tensor(np.arange(6, dtype=np.float32).reshape(2, 3))
    with pytest.raises(TruncatedPayloadError):
        read_tensor(blob[:-3])
    with pytest.raises(TruncatedPayloadError):
        read_tensor(blob + b"\x00")
    with pytest.raises(TruncatedPayloadError):
        read_tensor(blob[:7])


def test_stream_input(tmp_path):
    arr = np.ones((2, 2), dtype=np.float32)
    p = tmp_path / "t.fwt"
    p.write_bytes(write_tensor(arr))
    with open(p, "rb") as f:
        np.testing.assert_array_equal(read_tensor(f), arr)
