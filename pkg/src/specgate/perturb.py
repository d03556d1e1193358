"""Deterministic robustness perturbations: Gaussian blur and a compression
surrogate.

The compression surrogate is blockwise 8x8 DCT quantization with the
standard JPEG luminance table applied to every channel.  It reproduces the
experimental role of a video codec (high-frequency attenuation plus block
artifacts) without a codec stack; it is NOT bit-compatible with H.264/H.265
or JPEG output.
"""
from __future__ import annotations

import numpy as np

from .errors import DataError
from .validation import as_frame

__all__ = ["gaussian_blur", "compress", "block_dct2", "block_idct2",
           "quant_table", "parse_perturbation", "identity"]

# Standard JPEG luminance quantization table (Annex K), used per channel.
_BASE_TABLE = np.array([
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
], dtype=np.float64)


def _dct_matrix(n: int = 8) -> np.ndarray:
    """Orthonormal DCT-II basis: D @ D.T = I."""
    k = np.arange(n)[:, None]
    x = np.arange(n)[None, :]
    d = np.cos(np.pi * (2 * x + 1) * k / (2 * n))
    d[0] *= np.sqrt(1.0 / n)
    d[1:] *= np.sqrt(2.0 / n)
    return d


_DCT8 = _dct_matrix(8)


def gaussian_blur(frame, sigma: float):
    """Separable Gaussian blur; sigma = 0 returns the input bitwise."""
    if sigma < 0:
        raise DataError(f"sigma must be >= 0, got {sigma}")
    arr = as_frame(frame)
    if sigma == 0:
        return arr
    radius = int(np.ceil(3.0 * sigma))
    taps = np.exp(-0.5 * (np.arange(-radius, radius + 1) / sigma) ** 2)
    taps /= taps.sum()
    for axis in (0, 1):
        pad = [(0, 0)] * 3
        pad[axis] = (radius, radius)
        padded = np.pad(arr, pad, mode="reflect")
        out = np.zeros_like(arr)
        for i, w in enumerate(taps):
            sl = [slice(None)] * 3
            sl[axis] = slice(i, i + arr.shape[axis])
            out += w * padded[tuple(sl)]
        arr = out
    return arr


def quant_table(quality: int) -> np.ndarray:
    """JPEG-style quality scaling of the luminance table; steps in [1, 255]."""
    if not 1 <= quality <= 100:
        raise DataError(f"quality must be in [1, 100], got {quality}")
    s = 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality
    return np.clip(np.floor((_BASE_TABLE * s + 50.0) / 100.0), 1.0, 255.0)


def _to_blocks(channel: np.ndarray) -> np.ndarray:
    h, w = channel.shape
    return channel.reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3)


def _from_blocks(blocks: np.ndarray) -> np.ndarray:
    hb, wb = blocks.shape[:2]
    return blocks.transpose(0, 2, 1, 3).reshape(hb * 8, wb * 8)


def block_dct2(channel: np.ndarray) -> np.ndarray:
    """8x8 blockwise 2-D orthonormal DCT of a [H, W] channel (8 | H, W)."""
    blocks = _to_blocks(np.asarray(channel, dtype=np.float64))
    return _from_blocks(_DCT8 @ blocks @ _DCT8.T)


def block_idct2(coeffs: np.ndarray) -> np.ndarray:
    blocks = _to_blocks(np.asarray(coeffs, dtype=np.float64))
    return _from_blocks(_DCT8.T @ blocks @ _DCT8)


def compress(frame, quality: int):
    """Blockwise-DCT quantization surrogate for video compression.

    Input/output are [H, W, 3] float frames in [0, 1]; extents that are not
    multiples of 8 are reflect-padded for the transform and cropped back.
    """
    arr = as_frame(frame)
    h, w = arr.shape[:2]
    table = quant_table(quality)
    pad_h = (-h) % 8
    pad_w = (-w) % 8
    if pad_h or pad_w:
        arr = np.pad(arr, ((0, pad_h), (0, pad_w), (0, 0)), mode="reflect")
    out = np.empty_like(arr)
    for c in range(3):
        blocks = _DCT8 @ _to_blocks(arr[:, :, c] * 255.0 - 128.0) @ _DCT8.T
        blocks = np.round(blocks / table) * table
        out[:, :, c] = (_from_blocks(_DCT8.T @ blocks @ _DCT8) + 128.0) / 255.0
    return np.clip(out[:h, :w, :], 0.0, 1.0)


def identity(frame):
    return as_frame(frame)


def parse_perturbation(text: str | None):
    """'blur:SIGMA' | 'compress:QUALITY' | None -> (name, callable)."""
    if text is None or text == "none":
        return "none", identity
    kind, _, value = text.partition(":")
    if kind == "blur":
        try:
            sigma = float(value)
        except ValueError:
            raise DataError(f"bad blur sigma {value!r}") from None
        return f"blur:{sigma:g}", lambda f: gaussian_blur(f, sigma)
    if kind == "compress":
        try:
            quality = int(value)
        except ValueError:
            raise DataError(f"bad compress quality {value!r}") from None
        quant_table(quality)  # validate range now, not at first use
        return f"compress:{quality}", lambda f: compress(f, quality)
    raise DataError(f"unknown perturbation {text!r}; use blur:S or compress:Q")
