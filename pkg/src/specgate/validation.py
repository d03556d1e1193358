"""Input validation helpers shared by the public entry points.

Every converter returns a fresh, C-contiguous float64 array so downstream
code may assume dtype, layout, and finiteness without re-checking.
"""
from __future__ import annotations

import numpy as np

from .errors import DataError, ShapeError


def as_frame(frame, name: str = "frame") -> np.ndarray:
    """Validate one RGB image shaped [H, W, 3]; returns float64 copy."""
    arr = np.asarray(frame, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ShapeError(f"{name} must have shape [H, W, 3], got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"{name} has empty extent: {arr.shape}")
    if not np.isfinite(arr).all():
        raise ShapeError(f"{name} contains non-finite values")
    return np.array(arr, order="C")


def as_clip(clip, name: str = "clip") -> np.ndarray:
    """Validate a frame sequence shaped [T, H, W, 3]; returns float64 copy."""
    arr = np.asarray(clip, dtype=np.float64)
    if arr.ndim != 4 or arr.shape[3] != 3:
        raise ShapeError(f"{name} must have shape [T, H, W, 3], got {arr.shape}")
    if arr.shape[0] < 1:
        raise ShapeError(f"{name} has no frames")
    if not np.isfinite(arr).all():
        raise ShapeError(f"{name} contains non-finite values")
    return np.array(arr, order="C")


def as_scored_set(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    """Validate parallel score/label lists for the metric functions."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.ndim != 1 or y.ndim != 1 or s.shape != y.shape:
        raise ShapeError(
            f"scores and labels must be equal-length 1-D, got {s.shape} and {y.shape}")
    if s.size < 1:
        raise ShapeError("empty scored set")
    if not np.isfinite(s).all() or s.min() < 0.0 or s.max() > 1.0:
        raise DataError("scores must lie in [0, 1]")
    if not np.isin(y, (0, 1)).all():
        raise DataError("labels must be 0 (real) or 1 (fake)")
    return s, y.astype(np.int64)


def check_positive(name: str, value) -> None:
    if not value > 0:
        from .errors import ConfigError
        raise ConfigError(f"{name} must be positive, got {value}")
