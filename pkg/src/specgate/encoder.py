"""Patch-transformer encoder tower.

Two instances make up the detector: a semantic tower over normalized raw
frames (frozen after auxiliary pretraining) and a spectral tower over
normalized high-pass residuals (always trainable).  Both share this
implementation; freezing is a property of the parameter tensors.
"""
from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .config import EncoderConfig
from .errors import ShapeError
from .layers import Linear, TransformerBlock
from .rng import Stream

__all__ = ["PatchTransformer", "pool"]


def pool(tokens: Tensor) -> Tensor:
    """Class-token readout: row 0 of [tokens, d] or [batch, tokens, d]."""
    if tokens.ndim == 2:
        return ad.select(tokens, 0, 0)
    if tokens.ndim == 3:
        return ad.select(tokens, 1, 0)
    raise ShapeError(f"pool expects 2-D or 3-D tokens, got {tokens.shape}")


class PatchTransformer:
    def __init__(self, cfg: EncoderConfig, stream: Stream):
        self.cfg = cfg
        patch_dim = 3 * cfg.patch_size * cfg.patch_size
        self.patch = Linear(stream.child("patch"), patch_dim, cfg.dim)
        self.cls = Tensor(0.02 * stream.child("cls").normal((1, cfg.dim)),
                          requires_grad=True)
        self.pos = Tensor(0.02 * stream.child("pos").normal((cfg.token_count, cfg.dim)),
                          requires_grad=True)
        self.blocks = [
            TransformerBlock(stream.child("block", l), cfg.dim, cfg.heads, cfg.mlp_ratio)
            for l in range(cfg.depth)
        ]

    @property
    def depth(self) -> int:
        return self.cfg.depth

    def embed(self, frames: Tensor) -> Tensor:
        """[n, 3, H, W] -> [n, tokens, d]: patchify, project, prepend class
        token, add positional embeddings."""
        cfg = self.cfg
        if frames.ndim != 4 or frames.shape[1:] != (3, cfg.input_size, cfg.input_size):
            raise ShapeError(
                f"encoder expects [n, 3, {cfg.input_size}, {cfg.input_size}], "
                f"got {frames.shape}")
        n = frames.shape[0]
        g, p = cfg.grid, cfg.patch_size
        x = ad.reshape(frames, (n, 3, g, p, g, p))
        x = ad.transpose(x, (0, 2, 4, 1, 3, 5))          # [n, gy, gx, 3, p, p]
        x = ad.reshape(x, (n, g * g, 3 * p * p))
        tokens = self.patch(x)                           # [n, patches, d]
        cls = ad.repeat0(self.cls, n)                    # [n, 1, d]
        x = ad.concat([cls, tokens], axis=1)
        return ad.add_bias(x, self.pos)

    def block(self, layer: int, x: Tensor) -> Tensor:
        return self.blocks[layer](x)

    def forward(self, frames: Tensor) -> Tensor:
        x = self.embed(frames)
        for block in self.blocks:
            x = block(x)
        return x

    def parameters(self) -> dict[str, Tensor]:
        out = {"patch.w": self.patch.w, "patch.b": self.patch.b,
               "cls": self.cls, "pos": self.pos}
        for l, block in enumerate(self.blocks):
            for name, tensor in block.parameters().items():
                out[f"blocks.{l}.{name}"] = tensor
        return out

    def checksum(self) -> str:
        """Order-stable fingerprint of all parameter bytes (freeze checks)."""
        import hashlib
        digest = hashlib.sha256()
        for name, tensor in self.parameters().items():
            digest.update(name.encode())
            digest.update(np.ascontiguousarray(tensor.data).tobytes())
        return digest.hexdigest()
