"""Binary PPM (P6) reading/writing plus raw float-grid serialization.

P6 is the only image format the package touches: self-describing, codec
free, and byte-exact, so generated datasets hash identically everywhere.
Parse errors name the absolute byte offset of the offending input.

Raw residual grids are stored as a fixed little-endian layout: magic
"SGR1", three u32 extents (C, H, W), then C*H*W float64 values in C order.
Reading one back reproduces the array bitwise.
"""
from __future__ import annotations

import struct

import numpy as np

from .errors import DataError, ShapeError

__all__ = [
    "read_ppm", "write_ppm", "decode_frame", "encode_frame",
    "rescale_for_view", "write_raw_grid", "read_raw_grid",
]

_RAW_MAGIC = b"SGR1"


def _parse_error(offset: int, message: str) -> DataError:
    return DataError(f"PPM parse error at byte offset {offset}: {message}")


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Scan one whitespace-delimited header token, skipping '#' comments."""
    n = len(data)
    while pos < n:
        b = data[pos:pos + 1]
        if b == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif b.isspace():
            pos += 1
        else:
            break
    if pos >= n:
        raise _parse_error(pos, "unexpected end of header")
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    return data[start:pos], pos


def read_ppm(path) -> np.ndarray:
    """Read a binary P6 file into a uint8 array [H, W, 3]."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] != b"P6":
        raise _parse_error(0, f"expected magic 'P6', got {data[:2]!r}")
    pos = 2
    fields = []
    for name in ("width", "height", "maxval"):
        token, pos = _next_token(data, pos)
        try:
            value = int(token)
        except ValueError:
            raise _parse_error(pos - len(token),
                               f"{name} is not an integer: {token!r}") from None
        if value <= 0:
            raise _parse_error(pos - len(token), f"{name} must be positive, got {value}")
        fields.append(value)
    width, height, maxval = fields
    if maxval != 255:
        raise _parse_error(pos - len(str(maxval)),
                           f"only maxval 255 is supported, got {maxval}")
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise _parse_error(pos, "expected single whitespace after maxval")
    pos += 1
    need = width * height * 3
    raster = data[pos:pos + need]
    if len(raster) != need:
        raise _parse_error(len(data),
                           f"raster truncated: need {need} bytes, have {len(raster)}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3).copy()


def write_ppm(path, pixels: np.ndarray) -> None:
    """Write a uint8 array [H, W, 3] as binary P6."""
    arr = np.asarray(pixels)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
        raise ShapeError(f"write_ppm needs uint8 [H, W, 3], got {arr.dtype} {arr.shape}")
    header = f"P6\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(arr).tobytes())


def decode_frame(pixels: np.ndarray) -> np.ndarray:
    """uint8 [H, W, 3] -> float64 in [0, 1]."""
    return np.asarray(pixels, dtype=np.float64) / 255.0


def encode_frame(frame: np.ndarray) -> np.ndarray:
    """float [H, W, 3] in [0, 1] -> uint8 via round-half-even, clipped."""
    arr = np.asarray(frame, dtype=np.float64)
    return np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)


def rescale_for_view(values: np.ndarray) -> np.ndarray:
    """Affinely map an arbitrary real array onto uint8 [0, 255].

    A constant input maps to mid-gray.  Used for residual and spectrum
    dumps, which have no natural display range.
    """
    arr = np.asarray(values, dtype=np.float64)
    lo, hi = float(arr.min()), float(arr.max())
    if hi <= lo:
        return np.full(arr.shape, 128, dtype=np.uint8)
    scaled = (arr - lo) * (255.0 / (hi - lo))
    return np.clip(np.rint(scaled), 0, 255).astype(np.uint8)


def write_raw_grid(path, grid: np.ndarray) -> None:
    """Serialize a float64 [C, H, W] grid bitwise (little-endian)."""
    arr = np.ascontiguousarray(grid, dtype=np.float64)
    if arr.ndim != 3:
        raise ShapeError(f"raw grid must be [C, H, W], got {arr.shape}")
    with open(path, "wb") as fh:
        fh.write(_RAW_MAGIC)
        fh.write(struct.pack("<III", *arr.shape))
        fh.write(arr.astype("<f8").tobytes())


def read_raw_grid(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _RAW_MAGIC:
        raise DataError(f"raw grid file has wrong magic: {data[:4]!r}")
    c, h, w = struct.unpack_from("<III", data, 4)
    need = 16 + 8 * c * h * w
    if len(data) != need:
        raise DataError(f"raw grid file truncated: expected {need} bytes, have {len(data)}")
    return np.frombuffer(data, dtype="<f8", offset=16).reshape(c, h, w).copy()
