"""Analytic multiply-accumulate counts and measured inference throughput."""
from __future__ import annotations

import time

import numpy as np

from .config import DetectorConfig
from .model import VideoDetector

__all__ = ["block_macs", "model_macs", "measure_fps", "run_bench"]


def block_macs(tokens: int, dim: int, mlp_ratio: int) -> int:
    """Exact MACs of one pre-norm transformer block on `tokens` tokens.

    qkv projection (3·T·d²) + attention scores and value mix (2·T²·d) +
    output projection (T·d²) + two MLP matmuls (2·T·d·(ratio·d)).
    """
    t, d = int(tokens), int(dim)
    return 2 * t * t * d + 4 * t * d * d + 2 * t * d * (int(mlp_ratio) * d)


def model_macs(cfg: DetectorConfig) -> dict:
    """Per-component MAC counts for one clip of cfg.head.frames frames."""
    enc = cfg.encoder
    grid = enc.input_size // enc.patch_size
    n_patch = grid * grid
    tokens = n_patch + 1
    patch_dim = 3 * enc.patch_size * enc.patch_size

    towers = {"semantic_only": 1, "spectral_only": 1,
              "concat_no_gate": 2, "gated": 2}[cfg.variant]
    embed = n_patch * patch_dim * enc.dim
    tower_blocks = enc.depth * block_macs(tokens, enc.dim, enc.mlp_ratio)
    gates = (enc.depth * (3 * tokens * enc.dim * enc.dim)
             if cfg.variant == "gated" else 0)
    concat_proj = (2 * enc.dim * enc.dim
                   if cfg.variant == "concat_no_gate" else 0)

    per_frame = towers * (embed + tower_blocks) + gates + concat_proj
    head = cfg.head
    head_blocks = (head.layers * block_macs(head.frames, enc.dim,
                                            head.ffn_ratio)
                   if head.kind == "transformer" else 0)
    classifier = enc.dim
    total = per_frame * head.frames + head_blocks + classifier
    return {
        "variant": cfg.variant,
        "tokens_per_frame": tokens,
        "patch_embed_per_frame": towers * embed,
        "tower_blocks_per_frame": towers * tower_blocks,
        "gates_per_frame": gates,
        "concat_proj_per_frame": concat_proj,
        "encoder_per_frame": per_frame,
        "head_blocks": head_blocks,
        "classifier": classifier,
        "total_per_clip": total,
        "frames_per_clip": head.frames,
    }


def measure_fps(model: VideoDetector, n_frames: int = 32,
                seed: int = 0) -> float:
    """Frames per second of warm batched inference on synthetic inputs."""
    cfg = model.cfg
    frames = cfg.head.frames
    rng = np.random.default_rng(seed)
    shape = (1, frames, 3, cfg.encoder.input_size, cfg.encoder.input_size)
    sem = rng.normal(size=shape) if model.encoder.semantic is not None else None
    spec = (rng.normal(size=shape)
            if model.encoder.spectral is not None else None)
    model.score_clips(sem, spec)  # warm-up, excluded from timing
    clips = max(1, -(-int(n_frames) // frames))
    start = time.perf_counter()
    for _ in range(clips):
        model.score_clips(sem, spec)
    elapsed = time.perf_counter() - start
    return clips * frames / elapsed


def run_bench(cfg: DetectorConfig, n_frames: int = 32) -> dict:
    """MAC breakdown plus a measured FPS figure for one config."""
    report = {"macs": model_macs(cfg)}
    model = VideoDetector(cfg)
    report["fps"] = measure_fps(model, n_frames)
    report["timed_frames"] = int(n_frames)
    return report
