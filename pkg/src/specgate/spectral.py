"""High-pass spectral residual extraction.

The residual of a frame is what remains after removing everything inside a
radius-r disc around the spectrum's DC bin: each channel goes through
forward FFT, center shift, binary mask, inverse shift, inverse FFT, and the
real part is kept.  Generator artifacts (periodic gratings, upsampling
replicas) live in the surviving high band; smooth content does not.

Radius convention: a configured radius is defined on a nominal 224-wide
grid.  The transform itself runs on a square power-of-two grid P (frames
are padded there and cropped back), so the cutoff used on that grid is
r * P / 224.  This keeps the geometric cutoff fraction of the spectrum
identical across frame sizes: radius 32 removes the same band at 64x64 as
at 224x224.

Padding fills with the per-channel mean rather than zeros: the padded DC
bin then equals the frame mean exactly, so radius 0 removes precisely the
mean for every frame size, and boundary ringing from the pad edge is far
smaller.  Power-of-two inputs are never padded.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import ConfigError, ShapeError
from .fourier import fft2, fftshift, ifft2_real, ifftshift
from .validation import as_frame

__all__ = [
    "NOMINAL_GRID", "HighPassMask", "build_mask", "apply_mask",
    "effective_radius", "next_pow2", "pad_to_pow2", "extract_residual",
    "normalize_residual", "SpectralResidualExtractor",
]

# Configured radii are interpreted as bins on this grid regardless of the
# actual frame size; see the module docstring.
NOMINAL_GRID = 224


def next_pow2(n: int) -> int:
    if n < 1:
        raise ShapeError(f"extent must be positive, got {n}")
    return 1 << (n - 1).bit_length()


def effective_radius(radius: float, extent: int) -> float:
    """Scale a nominal-grid radius onto a transform grid of size `extent`.

    The product is computed before the division so that exact cases
    (e.g. 112 * 256 / 224 = 128) stay exact in floating point.
    """
    if radius < 0:
        raise ConfigError(f"mask radius must be non-negative, got {radius}")
    return (float(radius) * extent) / NOMINAL_GRID


@dataclass(frozen=True)
class HighPassMask:
    """Binary mask over a center-shifted spectrum: 0 on the closed disc of
    the given radius around (H//2, W//2), 1 outside."""

    height: int
    width: int
    radius: float
    bitmap: np.ndarray

    @property
    def masked_count(self) -> int:
        return int(self.height * self.width - int(self.bitmap.sum()))

    @property
    def masked_fraction(self) -> float:
        return self.masked_count / (self.height * self.width)


def build_mask(height: int, width: int, radius: float) -> HighPassMask:
    """Construct the high-pass mask; radius is in bins of this grid.

    A bin at distance exactly `radius` from the center is masked (closed
    disc).  Distances are compared squared, so integer-radius boundaries
    are decided exactly.
    """
    if height < 1 or width < 1:
        raise ShapeError(f"mask extents must be positive, got {height}x{width}")
    if radius < 0:
        raise ConfigError(f"mask radius must be non-negative, got {radius}")
    dy = np.arange(height, dtype=np.float64) - (height // 2)
    dx = np.arange(width, dtype=np.float64) - (width // 2)
    dist2 = dy[:, None] ** 2 + dx[None, :] ** 2
    bitmap = (dist2 > float(radius) ** 2).astype(np.uint8)
    return HighPassMask(height, width, float(radius), bitmap)


def apply_mask(spectrum: np.ndarray, mask: HighPassMask) -> np.ndarray:
    """Elementwise product of a center-shifted spectrum with the bitmap."""
    spec = np.asarray(spectrum)
    if spec.shape[-2:] != (mask.height, mask.width):
        raise ShapeError(
            f"spectrum extents {spec.shape[-2:]} do not match mask "
            f"{(mask.height, mask.width)}")
    return spec * mask.bitmap


def pad_to_pow2(channels: np.ndarray) -> tuple[np.ndarray, tuple[int, int]]:
    """Pad [C, H, W] to a square power-of-two grid with per-channel means.

    Returns the padded array and the original (H, W) for cropping back.
    """
    c, h, w = channels.shape
    p = next_pow2(max(h, w))
    if (h, w) == (p, p):
        return channels, (h, w)
    out = np.empty((c, p, p), dtype=channels.dtype)
    out[:] = channels.mean(axis=(1, 2))[:, None, None]
    out[:, :h, :w] = channels
    return out, (h, w)


def extract_residual(frame: np.ndarray, radius: float) -> np.ndarray:
    """High-pass spectral residual of an RGB frame.

    frame: [H, W, 3] real values.  Returns [3, H, W] float64.  The chain per
    channel is fft2 -> fftshift -> mask -> ifftshift -> ifft2_real, with the
    radius scaled from the nominal grid onto the padded transform grid.
    """
    arr = as_frame(frame)
    channels = np.ascontiguousarray(arr.transpose(2, 0, 1))
    padded, (h, w) = pad_to_pow2(channels)
    extent = padded.shape[-1]
    mask = build_mask(extent, extent, effective_radius(radius, extent))
    spectrum = fftshift(fft2(padded))
    residual = ifft2_real(ifftshift(apply_mask(spectrum, mask)))
    return np.ascontiguousarray(residual[:, :h, :w])


def normalize_residual(residual: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    """Standardize each channel of [3, H, W] to zero mean, unit variance.

    The variance is floored so a constant channel maps to zeros instead of
    dividing by zero; the same function normalizes raw frames for the
    semantic branch.
    """
    res = np.asarray(residual, dtype=np.float64)
    if res.ndim != 3:
        raise ShapeError(f"residual must be [C, H, W], got {res.shape}")
    mu = res.mean(axis=(1, 2), keepdims=True)
    var = res.var(axis=(1, 2), keepdims=True)
    return (res - mu) / np.sqrt(np.maximum(var, floor))


class SpectralResidualExtractor(TransformerMixin, BaseEstimator):
    """Stateless sklearn-style transformer: frames in, residuals out.

    Parameters
    ----------
    radius : float, default 32.0
        High-pass cutoff on the nominal 224 grid.
    normalize : bool, default True
        Standardize each output channel (the form the detector consumes).
    """

    def __init__(self, radius: float = 32.0, normalize: bool = True):
        self.radius = radius
        self.normalize = normalize

    def fit(self, X, y=None):
        if self.radius < 0:
            raise ConfigError(f"radius must be non-negative, got {self.radius}")
        return self

    def transform(self, X) -> np.ndarray:
        """X: one frame [H, W, 3] or a batch [N, H, W, 3] -> [N, 3, H, W]."""
        self.fit(X)
        arr = np.asarray(X, dtype=np.float64)
        frames = arr[None] if arr.ndim == 3 else arr
        if frames.ndim != 4:
            raise ShapeError(f"expected [H,W,3] or [N,H,W,3], got {arr.shape}")
        out = np.stack([self._one(f) for f in frames])
        return out

    def _one(self, frame: np.ndarray) -> np.ndarray:
        res = extract_residual(frame, self.radius)
        return normalize_residual(res) if self.normalize else res
