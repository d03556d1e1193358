"""Temporal aggregation head: per-frame features to one clip probability.

The default head adds learned temporal positional embeddings, runs a small
transformer over the frame axis, and averages the outputs; `mean_pool`
replaces all of that with a plain arithmetic mean.  A single zero-initialized
linear layer then maps the aggregate to a logit, so an untrained model
always answers 0.5.
"""
from __future__ import annotations

from . import autodiff as ad
from .autodiff import Tensor
from .config import HeadConfig
from .errors import ShapeError
from .layers import Linear, TransformerBlock
from .rng import Stream

__all__ = ["TemporalHead"]


class TemporalHead:
    def __init__(self, cfg: HeadConfig, dim: int, stream: Stream):
        self.cfg = cfg
        self.dim = dim
        if cfg.kind == "transformer":
            self.pos = Tensor(0.02 * stream.child("pos").normal((cfg.frames, dim)),
                              requires_grad=True)
            self.blocks = [
                TransformerBlock(stream.child("block", l), dim, cfg.heads, cfg.ffn_ratio)
                for l in range(cfg.layers)
            ]
        else:
            self.pos = None
            self.blocks = []
        self.classifier = Linear(stream.child("classifier"), dim, 1, zero_init=True)

    def aggregate(self, frame_features: Tensor) -> Tensor:
        """[T, d] or [batch, T, d] -> [d] or [batch, d]."""
        squeeze = frame_features.ndim == 2
        x = ad.reshape(frame_features, (1,) + frame_features.shape) if squeeze \
            else frame_features
        if x.ndim != 3 or x.shape[2] != self.dim:
            raise ShapeError(f"aggregate expects [..., T, {self.dim}], got "
                             f"{frame_features.shape}")
        if x.shape[1] != self.cfg.frames:
            raise ShapeError(
                f"head is configured for {self.cfg.frames} frames, got {x.shape[1]}")
        if self.cfg.kind == "transformer":
            x = ad.add_bias(x, self.pos)
            for block in self.blocks:
                x = block(x)
        out = ad.mean(x, axis=1)
        return ad.select(out, 0, 0) if squeeze else out

    def classify(self, aggregate: Tensor) -> tuple[Tensor, Tensor]:
        """[d] or [batch, d] -> (probability, logit), each [()] or [batch]."""
        squeeze = aggregate.ndim == 1
        x = ad.reshape(aggregate, (1,) + aggregate.shape) if squeeze else aggregate
        logits = ad.reshape(self.classifier(x), (x.shape[0],))
        if squeeze:
            logits = ad.select(logits, 0, 0)
        return ad.sigmoid(logits), logits

    def forward(self, frame_features: Tensor) -> tuple[Tensor, Tensor]:
        return self.classify(self.aggregate(frame_features))

    def parameters(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        if self.pos is not None:
            out["pos"] = self.pos
        for l, block in enumerate(self.blocks):
            for name, tensor in block.parameters().items():
                out[f"blocks.{l}.{name}"] = tensor
        out["classifier.w"] = self.classifier.w
        out["classifier.b"] = self.classifier.b
        return out
