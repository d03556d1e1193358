"""The assembled detector: dual-stream frame encoder plus temporal head.

Input convention: clips arrive as two numpy arrays shaped [batch, T, 3, H, W],
one per stream (normalized raw frames for the semantic tower, normalized
spectral residuals for the spectral tower).  Variants that skip a stream
accept None for it.
"""
from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .config import DetectorConfig
from .errors import ShapeError
from .fusion import DualStreamEncoder
from .layers import set_trainable
from .rng import Stream
from .temporal import TemporalHead

__all__ = ["VideoDetector"]


class VideoDetector:
    def __init__(self, cfg: DetectorConfig):
        self.cfg = cfg
        stream = Stream(cfg.seed)
        self.encoder = DualStreamEncoder(cfg, stream)
        self.head = TemporalHead(cfg.head, cfg.encoder.dim, stream.child("temporal"))
        self.semantic_frozen = False
        if cfg.frozen_semantic and self.encoder.semantic is not None:
            self.freeze_semantic()

    @property
    def variant(self) -> str:
        return self.encoder.variant

    def freeze_semantic(self) -> None:
        if self.encoder.semantic is not None:
            set_trainable(self.encoder.semantic.parameters(), False)
        self.semantic_frozen = True

    def unfreeze_semantic(self) -> None:
        if self.encoder.semantic is not None:
            set_trainable(self.encoder.semantic.parameters(), True)
        self.semantic_frozen = False

    def _check_clip_batch(self, arr: np.ndarray | None, which: str):
        if arr is None:
            return None
        size = self.cfg.encoder.input_size
        a = np.asarray(arr, dtype=np.float64)
        if a.ndim != 5 or a.shape[2:] != (3, size, size):
            raise ShapeError(
                f"{which} clips must be [batch, T, 3, {size}, {size}], got {a.shape}")
        if a.shape[1] != self.cfg.head.frames:
            raise ShapeError(
                f"model expects T={self.cfg.head.frames} frames, got {a.shape[1]}")
        return a

    def forward_clips(self, sem_clips: np.ndarray | None,
                      spec_clips: np.ndarray | None,
                      capture: dict | None = None) -> tuple[Tensor, Tensor]:
        """Returns (probabilities, logits), each a Tensor of shape [batch]."""
        sem = self._check_clip_batch(sem_clips, "semantic")
        spec = self._check_clip_batch(spec_clips, "spectral")
        present = sem if sem is not None else spec
        if present is None:
            raise ShapeError("at least one stream input is required")
        batch, frames = present.shape[0], present.shape[1]
        size = self.cfg.encoder.input_size

        def flatten(a):
            if a is None:
                return None
            return Tensor(a.reshape(batch * frames, 3, size, size))

        features = self.encoder.frame_features(flatten(sem), flatten(spec),
                                               capture=capture)
        per_clip = ad.reshape(features, (batch, frames, self.cfg.encoder.dim))
        aggregate = self.head.aggregate(per_clip)
        return self.head.classify(aggregate)

    def score_clips(self, sem_clips, spec_clips) -> np.ndarray:
        """Inference-only probabilities as a plain numpy array [batch]."""
        with ad.no_grad():
            probs, _ = self.forward_clips(sem_clips, spec_clips)
        return probs.data.copy()

    def capture_layer_states(self, sem_clips, spec_clips) -> dict:
        """Forward pass recording per-layer gate/feature snapshots.

        Returns {"gate"|"spec_pre"|"spec_post"|"sem": [depth arrays of
        [batch*T, tokens, d]], "probs": [batch]}; gated variant only.
        """
        capture: dict = {}
        with ad.no_grad():
            probs, _ = self.forward_clips(sem_clips, spec_clips, capture=capture)
        capture["probs"] = probs.data.copy()
        return capture

    def parameters(self) -> dict[str, Tensor]:
        out = dict(self.encoder.parameters())
        for name, tensor in self.head.parameters().items():
            out[f"head.{name}"] = tensor
        return out

    def trainable_parameters(self) -> dict[str, Tensor]:
        return {name: t for name, t in self.parameters().items() if t.requires_grad}
