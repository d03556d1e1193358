"""Radix-2 FFT over the trailing two axes of float64/complex128 arrays.

Convention: unnormalized forward transform
    X[u,v] = sum_{y,x} image[y,x] * exp(-2*pi*i*(u*y/H + v*x/W))
and 1/(H*W) on the inverse, so residuals come back at image scale and
Parseval reads  sum|x|^2 = (1/(H*W)) * sum|X|^2.

Implementation: iterative Cooley-Tukey over the last axis, vectorized across
all leading axes, applied to rows then columns.  Extents must be powers of
two; callers pad (see spectral.pad_to_pow2) for anything else.
"""
from __future__ import annotations

import numpy as np

from .errors import ShapeError

__all__ = ["fft2", "ifft2", "ifft2_real", "fftshift", "ifftshift"]


def _check_pow2(n: int, what: str) -> None:
    if n < 1 or (n & (n - 1)) != 0:
        raise ShapeError(
            f"{what} extent {n} is not a power of two; pad or crop the input "
            "before transforming")


def _bit_reverse_permutation(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n, dtype=np.int64)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def _fft_last_axis(a: np.ndarray, sign: float) -> np.ndarray:
    """Cooley-Tukey along the last axis; sign -1 forward, +1 inverse core."""
    n = a.shape[-1]
    _check_pow2(n, "transform")
    out = np.ascontiguousarray(a[..., _bit_reverse_permutation(n)],
                               dtype=np.complex128)
    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp(sign * 2j * np.pi * np.arange(half) / size)
        view = out.reshape(*out.shape[:-1], n // size, size)
        even = view[..., :half].copy()
        odd = view[..., half:] * twiddle
        view[..., :half] = even + odd
        view[..., half:] = even - odd
        size *= 2
    return out


def _transform2(a: np.ndarray, sign: float) -> np.ndarray:
    if a.ndim < 2:
        raise ShapeError(f"2-D transform needs >=2 axes, got shape {a.shape}")
    rows = _fft_last_axis(a, sign)
    cols = _fft_last_axis(np.swapaxes(rows, -1, -2), sign)
    return np.ascontiguousarray(np.swapaxes(cols, -1, -2))


def fft2(image: np.ndarray) -> np.ndarray:
    """Unnormalized forward 2-D DFT of the trailing two axes."""
    return _transform2(np.asarray(image), -1.0)


def ifft2(spectrum: np.ndarray) -> np.ndarray:
    """Inverse 2-D DFT with 1/(H*W) normalization; complex output."""
    spec = np.asarray(spectrum)
    h, w = spec.shape[-2], spec.shape[-1]
    return _transform2(spec, +1.0) / (h * w)


def ifft2_real(spectrum: np.ndarray, max_imag: float | None = 1e-6) -> np.ndarray:
    """Inverse transform returning the real part.

    For spectra of real images (Hermitian-symmetric) the imaginary part is
    pure numerical noise; `max_imag` bounds it relative to the real peak and
    a violation raises, which catches callers feeding non-Hermitian spectra
    by mistake.  Pass None to skip the check deliberately.
    """
    out = ifft2(spectrum)
    if max_imag is not None:
        limit = max_imag * max(1.0, float(np.abs(out.real).max(initial=0.0)))
        worst = float(np.abs(out.imag).max(initial=0.0))
        if worst > limit:
            from .errors import NumericsError
            raise NumericsError(
                f"inverse transform imaginary part {worst:.3e} exceeds {limit:.3e}; "
                "input spectrum is not Hermitian-symmetric")
    return np.ascontiguousarray(out.real)


def fftshift(spectrum: np.ndarray) -> np.ndarray:
    """Cyclically move the DC bin to (H//2, W//2) of the trailing axes."""
    a = np.asarray(spectrum)
    return np.roll(a, (a.shape[-2] // 2, a.shape[-1] // 2), axis=(-2, -1))


def ifftshift(spectrum: np.ndarray) -> np.ndarray:
    """Exact inverse of fftshift (identical to it for even extents)."""
    a = np.asarray(spectrum)
    return np.roll(a, (-(a.shape[-2] // 2), -(a.shape[-1] // 2)), axis=(-2, -1))
