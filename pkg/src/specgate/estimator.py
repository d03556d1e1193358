"""A scikit-learn style classifier facade over the detector.

`fit(X, y)` takes raw pixel clips and binary labels; `predict_proba` /
`predict` score new clips.  This is the array-in/array-out entry point;
the CLI works with datasets on disk instead.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .config import default_config
from .datagen import clip_to_streams
from .errors import ConfigError, DataError
from .images import encode_frame
from .training import Example, score_examples, train

__all__ = ["VideoAuthenticityClassifier"]


class VideoAuthenticityClassifier(ClassifierMixin, BaseEstimator):
    """Detect AI-generated video clips from pixel data.

    Parameters mirror the training config.  `semantic_pretrain` defaults to
    "random" here because the plain (X, y) interface carries no content
    class annotations; pass `content_classes` to `fit` and set
    `semantic_pretrain="aux"` to pretrain the semantic tower.

    Attributes after fit: `model_` (the trained network), `config_`,
    `history_` (per-epoch log), `classes_` (= [0, 1]).
    """

    def __init__(self, radius: float = 32.0, variant: str = "gated",
                 patch_size: int = 16, depth: int = 4, dim: int = 64,
                 heads: int = 4, mlp_ratio: int = 4,
                 head_kind: str = "transformer", head_layers: int = 2,
                 head_heads: int = 8, head_ffn_ratio: int = 4,
                 epochs: int = 20, lr: float = 3e-4,
                 weight_decay: float = 1e-4, batch_size: int = 4,
                 seed: int = 0, frozen_semantic: bool = True,
                 semantic_pretrain: str = "random",
                 pretrain_epochs: int = 2):
        self.radius = radius
        self.variant = variant
        self.patch_size = patch_size
        self.depth = depth
        self.dim = dim
        self.heads = heads
        self.mlp_ratio = mlp_ratio
        self.head_kind = head_kind
        self.head_layers = head_layers
        self.head_heads = head_heads
        self.head_ffn_ratio = head_ffn_ratio
        self.epochs = epochs
        self.lr = lr
        self.weight_decay = weight_decay
        self.batch_size = batch_size
        self.seed = seed
        self.frozen_semantic = frozen_semantic
        self.semantic_pretrain = semantic_pretrain
        self.pretrain_epochs = pretrain_epochs

    def _as_clip_batch(self, X) -> np.ndarray:
        arr = np.asarray(X)
        if arr.ndim != 5 or arr.shape[4] != 3:
            raise DataError(
                f"X must be [n_clips, frames, height, width, 3], "
                f"got {arr.shape}")
        if arr.shape[2] != arr.shape[3]:
            raise DataError(f"frames must be square, got {arr.shape[2]}x"
                            f"{arr.shape[3]}")
        if arr.dtype == np.uint8:
            return arr
        arr = arr.astype(np.float64)
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise DataError(
                "float clips must lie in [0, 1] (or pass uint8 pixels)")
        return np.stack([np.stack([encode_frame(f) for f in clip])
                         for clip in arr])

    def _examples(self, clips: np.ndarray, y=None, content_classes=None,
                  max_frames: int | None = None) -> list[Example]:
        n = clips.shape[0]
        labels = np.zeros(n, dtype=int) if y is None else np.asarray(y)
        if labels.shape != (n,):
            raise DataError(f"y must have shape ({n},), got {labels.shape}")
        if y is not None and not np.isin(labels, (0, 1)).all():
            raise DataError("labels must be 0 (real) or 1 (generated)")
        classes = (np.zeros(n, dtype=int) if content_classes is None
                   else np.asarray(content_classes, dtype=int))
        if classes.shape != (n,):
            raise DataError(
                f"content_classes must have shape ({n},), got {classes.shape}")
        out = []
        for i in range(n):
            sem, spec = clip_to_streams(clips[i], self.radius,
                                        max_frames=max_frames)
            out.append(Example(clip_id=f"clip_{i:04d}", label=int(labels[i]),
                               content_class=int(classes[i]),
                               sem=sem, spec=spec))
        return out

    def fit(self, X, y, content_classes=None):
        clips = self._as_clip_batch(X)
        if self.semantic_pretrain == "aux" and content_classes is None:
            raise ConfigError(
                'semantic_pretrain="aux" needs content_classes in fit(); '
                'use semantic_pretrain="random" for plain (X, y) data')
        cfg = default_config(
            radius=self.radius, variant=self.variant,
            encoder=dict(input_size=int(clips.shape[2]),
                         patch_size=self.patch_size, depth=self.depth,
                         dim=self.dim, heads=self.heads,
                         mlp_ratio=self.mlp_ratio),
            head=dict(kind=self.head_kind, layers=self.head_layers,
                      heads=self.head_heads, ffn_ratio=self.head_ffn_ratio,
                      frames=int(clips.shape[1])),
            epochs=self.epochs, lr=self.lr, weight_decay=self.weight_decay,
            batch_size=self.batch_size, seed=self.seed,
            frozen_semantic=self.frozen_semantic,
            semantic_pretrain=self.semantic_pretrain,
            pretrain_epochs=self.pretrain_epochs)
        examples = self._examples(clips, y, content_classes)
        self.model_, self.history_ = train(cfg, examples)
        self.config_ = cfg
        self.classes_ = np.array([0, 1])
        return self

    def predict_proba(self, X) -> np.ndarray:
        """Per-clip [P(real), P(generated)] columns, ordered by classes_."""
        check_is_fitted(self, "model_")
        examples = self._examples(self._as_clip_batch(X),
                                  max_frames=self.config_.head.frames)
        p_fake = score_examples(self.model_, examples,
                                self.config_.batch_size)
        return np.column_stack([1.0 - p_fake, p_fake])

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)
