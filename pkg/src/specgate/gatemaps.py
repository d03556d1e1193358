"""Gate and feature heatmaps for the gated variant.

For a chosen encoder layer, three per-frame maps are rendered on the patch
grid and upsampled to pixel extent: the spectral features entering the
merge (per-token channel-mean magnitude), the gate values (per-token
channel mean, raw sigmoid outputs), and the features after the merge.
"""
from __future__ import annotations

import pathlib

import numpy as np

from .datagen import clip_to_streams
from .errors import ConfigError
from .images import rescale_for_view, write_ppm
from .model import VideoDetector

__all__ = ["layer_token_maps", "render_gate_maps", "MAP_KINDS"]

MAP_KINDS = ("spec_pre", "gate", "spec_post")


def _token_grid(tokens_by_frame: np.ndarray, grid: int,
                magnitude: bool) -> np.ndarray:
    """[T, tokens, d] -> [T, grid, grid] by dropping the class token and
    averaging channels (of magnitudes when `magnitude`)."""
    per_token = np.abs(tokens_by_frame) if magnitude else tokens_by_frame
    per_token = per_token[:, 1:, :].mean(axis=2)
    return per_token.reshape(per_token.shape[0], grid, grid)


def layer_token_maps(model: VideoDetector, frames_uint8: np.ndarray,
                     layer: int) -> dict:
    """Raw per-frame token maps at one layer of a gated model.

    Returns {"spec_pre"|"gate"|"spec_post": [T, grid, grid], "probs": [1]}.
    Gate values are raw sigmoid outputs in (0, 1).
    """
    if model.variant != "gated":
        raise ConfigError(
            f"layer maps need the gated variant, got {model.variant!r}")
    depth = model.cfg.encoder.depth
    if not 0 <= layer < depth:
        raise ConfigError(f"layer must be in [0, {depth - 1}], got {layer}")
    cfg = model.cfg
    sem, spec = clip_to_streams(frames_uint8, cfg.radius,
                                max_frames=cfg.head.frames)
    capture = model.capture_layer_states(sem[None], spec[None])
    grid = cfg.encoder.input_size // cfg.encoder.patch_size
    return {
        "spec_pre": _token_grid(capture["spec_pre"][layer], grid, True),
        "gate": _token_grid(capture["gate"][layer], grid, False),
        "spec_post": _token_grid(capture["spec_post"][layer], grid, True),
        "probs": capture["probs"],
    }


def render_gate_maps(model: VideoDetector, frames_uint8: np.ndarray,
                     layer: int, out_dir) -> list[pathlib.Path]:
    """Write per-frame PPM heatmaps; returns the written paths in order.

    Image extent is the patch grid times the patch size on each axis.
    """
    maps = layer_token_maps(model, frames_uint8, layer)
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    patch = model.cfg.encoder.patch_size
    paths = []
    for kind in MAP_KINDS:
        stack = maps[kind]
        for t in range(stack.shape[0]):
            pixels = np.repeat(np.repeat(stack[t], patch, axis=0),
                               patch, axis=1)
            gray = rescale_for_view(pixels)
            path = out_dir / f"{kind}_layer{layer}_frame{t:02d}.ppm"
            write_ppm(path, np.stack([gray, gray, gray], axis=2))
            paths.append(path)
    return paths
