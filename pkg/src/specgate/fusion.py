"""Gated dual-stream fusion.

Per layer, both towers advance one block, a sigmoid gate is computed from
the concatenated token features, and only the spectral stream is modulated:

    gate     = sigmoid(MLP([sem ; spec]))        per token, per channel
    sem_out  = sem                                (identity, bitwise)
    spec_out = spec * (1 + gate)                  each factor in (1, 2)

The gate MLP's output layer starts at zero, so training begins from a
neutral uniform 1.5x modulation.  Ablation variants reduce this to single
towers or to late concatenation of pooled features.
"""
from __future__ import annotations

from . import autodiff as ad
from .autodiff import Tensor
from .config import VARIANTS, DetectorConfig
from .encoder import PatchTransformer, pool
from .errors import ConfigError, ShapeError
from .layers import Linear
from .rng import Stream

__all__ = ["GateBlock", "DualStreamEncoder"]


class GateBlock:
    """Two-layer token-shared MLP from 2d to d, squashed by sigmoid."""

    def __init__(self, stream: Stream, dim: int):
        self.dim = dim
        self.fc1 = Linear(stream.child("fc1"), 2 * dim, dim)
        # Zero output layer: gate starts exactly at sigmoid(0) = 0.5.
        self.fc2 = Linear(stream.child("fc2"), dim, dim, zero_init=True)

    def __call__(self, sem: Tensor, spec: Tensor) -> Tensor:
        if sem.shape != spec.shape or sem.shape[-1] != self.dim:
            raise ShapeError(
                f"gate expects matching [..., tokens, {self.dim}] streams, "
                f"got {sem.shape} and {spec.shape}")
        joint = ad.concat([sem, spec], axis=sem.ndim - 1)
        return ad.sigmoid(self.fc2(ad.gelu(self.fc1(joint))))

    def parameters(self) -> dict[str, Tensor]:
        return {"fc1.w": self.fc1.w, "fc1.b": self.fc1.b,
                "fc2.w": self.fc2.w, "fc2.b": self.fc2.b}


class DualStreamEncoder:
    """Variant-aware frame encoder producing one feature vector per frame."""

    def __init__(self, cfg: DetectorConfig, stream: Stream):
        if cfg.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {cfg.variant!r}")
        self.cfg = cfg
        self.variant = cfg.variant
        enc = cfg.encoder
        uses_sem = self.variant in ("semantic_only", "concat_no_gate", "gated")
        uses_spec = self.variant in ("spectral_only", "concat_no_gate", "gated")
        self.semantic = PatchTransformer(enc, stream.child("semantic")) if uses_sem else None
        self.spectral = PatchTransformer(enc, stream.child("spectral")) if uses_spec else None
        self.gates = ([GateBlock(stream.child("gates", l), enc.dim)
                       for l in range(enc.depth)]
                      if self.variant == "gated" else None)
        self.concat_proj = (Linear(stream.child("concat_proj"), 2 * enc.dim, enc.dim)
                            if self.variant == "concat_no_gate" else None)

    # --- the two fusion primitives (gated variant) ---------------------------

    def compute_gate(self, layer: int, sem: Tensor, spec: Tensor) -> Tensor:
        """Gate values for one layer; strictly inside (0, 1)."""
        if self.gates is None:
            raise ConfigError(f"variant {self.variant!r} has no gates")
        return self.gates[layer](sem, spec)

    def merge(self, layer: int, sem: Tensor, spec: Tensor,
              gate: Tensor | None = None) -> tuple[Tensor, Tensor, Tensor]:
        """One fusion step: returns (sem_out, spec_out, gate).

        sem_out IS the input object (identity pass-through); spec_out is
        spec scaled elementwise by (1 + gate).
        """
        if gate is None:
            gate = self.compute_gate(layer, sem, spec)
        spec_out = ad.mul(spec, ad.add_scalar(gate, 1.0))
        return sem, spec_out, gate

    # --- full per-frame forward ----------------------------------------------

    def frame_features(self, sem_frames: Tensor | None, spec_frames: Tensor | None,
                       capture: dict | None = None) -> Tensor:
        """[n, 3, H, W] stream inputs -> [n, d] per-frame features.

        Only the streams the variant consumes may be provided; `capture`
        (a dict) receives per-layer numpy snapshots for visualization.
        """
        if self.variant == "semantic_only":
            return pool(self.semantic.forward(self._need(sem_frames, "semantic")))
        if self.variant == "spectral_only":
            return pool(self.spectral.forward(self._need(spec_frames, "spectral")))
        if self.variant == "concat_no_gate":
            sem = pool(self.semantic.forward(self._need(sem_frames, "semantic")))
            spec = pool(self.spectral.forward(self._need(spec_frames, "spectral")))
            return self.concat_proj(ad.concat([sem, spec], axis=1))
        # gated
        sem = self.semantic.embed(self._need(sem_frames, "semantic"))
        spec = self.spectral.embed(self._need(spec_frames, "spectral"))
        for layer in range(self.cfg.encoder.depth):
            sem = self.semantic.block(layer, sem)
            spec = self.spectral.block(layer, spec)
            if capture is not None:
                capture.setdefault("spec_pre", []).append(spec.data.copy())
            sem, spec, gate = self.merge(layer, sem, spec)
            if capture is not None:
                capture.setdefault("gate", []).append(gate.data.copy())
                capture.setdefault("spec_post", []).append(spec.data.copy())
                capture.setdefault("sem", []).append(sem.data.copy())
        return pool(spec)

    @staticmethod
    def _need(frames: Tensor | None, which: str) -> Tensor:
        if frames is None:
            raise ShapeError(f"variant requires the {which} stream input")
        return frames

    def parameters(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        if self.semantic is not None:
            for name, t in self.semantic.parameters().items():
                out[f"semantic.{name}"] = t
        if self.spectral is not None:
            for name, t in self.spectral.parameters().items():
                out[f"spectral.{name}"] = t
        if self.gates is not None:
            for l, gate in enumerate(self.gates):
                for name, t in gate.parameters().items():
                    out[f"gates.{l}.{name}"] = t
        if self.concat_proj is not None:
            out["concat_proj.w"] = self.concat_proj.w
            out["concat_proj.b"] = self.concat_proj.b
        return out
