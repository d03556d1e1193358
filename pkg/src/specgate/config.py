"""Configuration dataclasses, JSON round-tripping, and presets.

`default_config()` is sized for minutes-scale training on a single CPU
core; `full_scale_config()` mirrors a ViT-B/32 tower (depth 12, width 768,
12 heads, 224x224 input) with the corresponding full-scale optimizer
protocol (lr 1e-5, weight decay 1e-4, batch 16, 15 epochs) and exists for
shape checking, not for training here.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from .errors import ConfigError

VARIANTS = ("semantic_only", "spectral_only", "concat_no_gate", "gated")
HEAD_KINDS = ("transformer", "mean_pool")
PRETRAIN_MODES = ("aux", "random")

# Short CLI aliases for the ablation variants.
VARIANT_ALIASES = {
    "sem": "semantic_only",
    "spec": "spectral_only",
    "concat": "concat_no_gate",
    "gated": "gated",
}


def resolve_variant(name: str) -> str:
    full = VARIANT_ALIASES.get(name, name)
    if full not in VARIANTS:
        raise ConfigError(f"unknown variant {name!r}; choose from {VARIANTS}")
    return full


@dataclass
class EncoderConfig:
    input_size: int = 224
    patch_size: int = 32
    depth: int = 4
    dim: int = 64
    heads: int = 4
    mlp_ratio: int = 4

    def __post_init__(self):
        for name in ("input_size", "patch_size", "depth", "dim", "heads", "mlp_ratio"):
            if getattr(self, name) < 1:
                raise ConfigError(f"encoder.{name} must be >= 1")
        if self.input_size % self.patch_size != 0:
            raise ConfigError(
                f"input_size {self.input_size} not divisible by patch_size {self.patch_size}")
        if self.dim % self.heads != 0:
            raise ConfigError(f"dim {self.dim} not divisible by heads {self.heads}")

    @property
    def grid(self) -> int:
        return self.input_size // self.patch_size

    @property
    def token_count(self) -> int:
        return 1 + self.grid * self.grid


@dataclass
class HeadConfig:
    kind: str = "transformer"
    layers: int = 2
    heads: int = 8
    ffn_ratio: int = 4
    frames: int = 8

    def __post_init__(self):
        if self.kind not in HEAD_KINDS:
            raise ConfigError(f"head.kind must be one of {HEAD_KINDS}, got {self.kind!r}")
        for name in ("layers", "heads", "ffn_ratio", "frames"):
            if getattr(self, name) < 1:
                raise ConfigError(f"head.{name} must be >= 1")


@dataclass
class DetectorConfig:
    radius: float = 32.0
    variant: str = "gated"
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    head: HeadConfig = field(default_factory=HeadConfig)
    frozen_semantic: bool = True
    semantic_pretrain: str = "aux"
    pretrain_epochs: int = 2
    lr: float = 3e-4
    weight_decay: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 4
    epochs: int = 20
    seed: int = 0

    def __post_init__(self):
        self.variant = resolve_variant(self.variant)
        if self.radius < 0:
            raise ConfigError(f"radius must be non-negative, got {self.radius}")
        if self.semantic_pretrain not in PRETRAIN_MODES:
            raise ConfigError(
                f"semantic_pretrain must be one of {PRETRAIN_MODES}, "
                f"got {self.semantic_pretrain!r}")
        if not self.lr > 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.batch_size < 1 or self.epochs < 0 or self.pretrain_epochs < 0:
            raise ConfigError("batch_size must be >= 1 and epoch counts >= 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1 and self.eps > 0):
            raise ConfigError("invalid Adam constants")
        if self.weight_decay < 0:
            raise ConfigError("weight_decay must be non-negative")
        if self.head.kind == "transformer" and self.encoder.dim % self.head.heads != 0:
            raise ConfigError(
                f"encoder dim {self.encoder.dim} not divisible by head heads "
                f"{self.head.heads}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        """Canonical form: sorted keys, no whitespace; stable for hashing."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()

    @classmethod
    def from_dict(cls, data: dict) -> "DetectorConfig":
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "encoder" in data and isinstance(data["encoder"], dict):
            data["encoder"] = _sub(EncoderConfig, data["encoder"])
        if "head" in data and isinstance(data["head"], dict):
            data["head"] = _sub(HeadConfig, data["head"])
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "DetectorConfig":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"config is not valid JSON: {err}") from None
        if not isinstance(payload, dict):
            raise ConfigError("config JSON must be an object")
        return cls.from_dict(payload)


def _sub(cls, data: dict):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    return cls(**data)


def default_config(**overrides) -> DetectorConfig:
    """Small, CPU-trainable configuration."""
    cfg = DetectorConfig()
    return DetectorConfig.from_dict({**cfg.to_dict(), **overrides}) if overrides else cfg


def full_scale_config() -> DetectorConfig:
    """ViT-B/32-shaped towers and the full-scale training protocol."""
    return DetectorConfig(
        encoder=EncoderConfig(input_size=224, patch_size=32, depth=12,
                              dim=768, heads=12, mlp_ratio=4),
        head=HeadConfig(kind="transformer", layers=2, heads=8, ffn_ratio=4, frames=8),
        lr=1e-5,
        weight_decay=1e-4,
        batch_size=16,
        epochs=15,
    )
