"""Adam training loop for the video detector.

Training is deterministic end to end: every shuffle and every weight init
is keyed off the config seed through the counter-based stream, so two runs
with the same config and data produce identical epoch losses and weights.
"""
from __future__ import annotations

import json
import math
import pathlib
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .config import DetectorConfig
from .datagen import (CONTENT_CLASSES, clip_to_streams, load_manifest,
                      read_clip_frames, split_entries)
from .encoder import pool
from .errors import DataError, NumericsError
from .layers import Linear, set_trainable
from .model import VideoDetector
from .rng import Stream

__all__ = ["AdamState", "adam_step", "Example", "load_examples",
           "score_examples", "train", "train_on_dataset"]


class AdamState:
    """First/second moment accumulators, one pair per named parameter."""

    def __init__(self, params: dict[str, Tensor]):
        self.m = {n: np.zeros_like(t.data) for n, t in params.items()}
        self.v = {n: np.zeros_like(t.data) for n, t in params.items()}
        self.step = 0


def adam_step(params: dict[str, Tensor], state: AdamState, lr: float,
              weight_decay: float = 0.0, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One bias-corrected Adam update; L2 decay is added to the gradient."""
    state.step += 1
    bc1 = 1.0 - beta1 ** state.step
    bc2 = 1.0 - beta2 ** state.step
    for name, p in params.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        if weight_decay:
            g = g + weight_decay * p.data
        m, v = state.m[name], state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p.data = p.data - lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


@dataclass
class Example:
    """One clip, preprocessed into both model input streams."""
    clip_id: str
    label: int
    content_class: int  # index into datagen.CONTENT_CLASSES
    sem: np.ndarray   # [T, 3, S, S]
    spec: np.ndarray  # [T, 3, S, S]


def load_examples(root, radius: float, frames: int,
                  split: str = "train") -> list[Example]:
    """Read one split of a generated dataset and precompute both streams."""
    root = pathlib.Path(root)
    manifest = load_manifest(root)
    entries = split_entries(manifest, split)
    if not entries:
        raise DataError(f"dataset {root} has no {split!r} clips")
    out = []
    for entry in entries:
        raw = read_clip_frames(root / entry["path"])
        sem, spec = clip_to_streams(raw, radius, max_frames=frames)
        out.append(Example(clip_id=entry["path"], label=int(entry["label"]),
                           content_class=int(entry["content_class"]),
                           sem=sem, spec=spec))
    return out


def _stream_batches(model: VideoDetector, examples: list[Example],
                    idx: list[int]):
    sem = spec = None
    if model.encoder.semantic is not None:
        sem = np.stack([examples[i].sem for i in idx])
    if model.encoder.spectral is not None:
        spec = np.stack([examples[i].spec for i in idx])
    labels = np.array([examples[i].label for i in idx], dtype=np.float64)
    return sem, spec, labels


def score_examples(model: VideoDetector, examples: list[Example],
                   batch_size: int = 16) -> np.ndarray:
    """Inference probabilities for a list of examples, in order."""
    scores = []
    for start in range(0, len(examples), batch_size):
        idx = list(range(start, min(start + batch_size, len(examples))))
        sem, spec, _ = _stream_batches(model, examples, idx)
        scores.append(model.score_clips(sem, spec))
    return np.concatenate(scores)


def _check_loss(value: float, stage: str, epoch: int, batch: int) -> None:
    if not math.isfinite(value):
        raise NumericsError(
            f"non-finite {stage} loss ({value}) at epoch {epoch}, "
            f"batch {batch}; lower the learning rate or inspect the data")


def _pretrain_semantic(model: VideoDetector, examples: list[Example]) -> None:
    """Self-supervised stand-in: classify the procedural content class.

    Trains the semantic tower plus a throwaway linear head for
    `pretrain_epochs`, then re-applies the configured freeze and discards
    the head.  This gives the semantic stream content-aware features that
    carry no artifact information.
    """
    cfg = model.cfg
    tower = model.encoder.semantic
    stream = Stream(cfg.seed).child("pretrain")
    head = Linear(stream.child("head"), cfg.encoder.dim, len(CONTENT_CLASSES))
    set_trainable(tower.parameters(), True)
    params = {f"semantic.{k}": t for k, t in tower.parameters().items()}
    params.update({f"aux_head.{k}": t for k, t in head.parameters().items()})
    state = AdamState(params)
    labels = np.array([e.content_class for e in examples])
    if labels.min() < 0 or labels.max() >= len(CONTENT_CLASSES):
        raise DataError(
            f"content classes must index into {CONTENT_CLASSES}, "
            f"got range [{labels.min()}, {labels.max()}]")
    for epoch in range(cfg.pretrain_epochs):
        order = stream.child("order", epoch).shuffle(list(range(len(examples))))
        for batch_no, start in enumerate(range(0, len(order), cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            sem = np.stack([examples[i].sem for i in idx])
            b, t = sem.shape[0], sem.shape[1]
            flat = Tensor(sem.reshape(b * t, *sem.shape[2:]))
            logits = head(pool(tower.forward(flat)))
            loss = ad.softmax_cross_entropy(logits, np.repeat(labels[idx], t))
            _check_loss(float(loss.data), "pretrain", epoch, batch_no)
            ad.backward(loss)
            adam_step(params, state, cfg.lr, cfg.weight_decay,
                      cfg.beta1, cfg.beta2, cfg.eps)
            for p in params.values():
                p.grad = None
    if cfg.frozen_semantic:
        model.freeze_semantic()


def train(cfg: DetectorConfig, train_examples: list[Example],
          val_examples: list[Example] | None = None,
          log=None) -> tuple[VideoDetector, list[dict]]:
    """Train a fresh detector; returns (model, per-epoch history).

    Each history entry holds the epoch index, mean training loss, the
    validation accuracy (None without validation data), and the individual
    batch losses.  `log`, if given, receives one compact JSON line per
    epoch with the first three fields.
    """
    present = {e.label for e in train_examples}
    if present != {0, 1}:
        raise DataError(
            f"training data must contain both real and fake clips, "
            f"got labels {sorted(present)}")
    model = VideoDetector(cfg)
    if (model.encoder.semantic is not None and cfg.semantic_pretrain == "aux"
            and cfg.pretrain_epochs > 0):
        _pretrain_semantic(model, train_examples)
    params = model.trainable_parameters()
    state = AdamState(params)
    stream = Stream(cfg.seed).child("train")
    history: list[dict] = []
    for epoch in range(cfg.epochs):
        order = stream.child("order", epoch).shuffle(
            list(range(len(train_examples))))
        batch_losses = []
        for batch_no, start in enumerate(range(0, len(order), cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            sem, spec, labels = _stream_batches(model, train_examples, idx)
            _, logits = model.forward_clips(sem, spec)
            loss = ad.bce_with_logits(logits, labels)
            value = float(loss.data)
            _check_loss(value, "train", epoch, batch_no)
            ad.backward(loss)
            adam_step(params, state, cfg.lr, cfg.weight_decay,
                      cfg.beta1, cfg.beta2, cfg.eps)
            for p in params.values():
                p.grad = None
            batch_losses.append(value)
        entry = {
            "epoch": epoch,
            "loss": float(np.mean(batch_losses)),
            "val_acc": None,
        }
        if val_examples:
            scores = score_examples(model, val_examples, cfg.batch_size)
            wanted = np.array([e.label for e in val_examples])
            entry["val_acc"] = float(((scores >= 0.5) == wanted).mean())
        if log is not None:
            log(json.dumps(entry, sort_keys=True))
        entry["batch_losses"] = batch_losses
        history.append(entry)
    return model, history


def train_on_dataset(cfg: DetectorConfig, root, log=None,
                     validate: bool = True):
    """Load a generated dataset's splits and train on them."""
    train_examples = load_examples(root, cfg.radius, cfg.head.frames, "train")
    val_examples = (load_examples(root, cfg.radius, cfg.head.frames, "test")
                    if validate else None)
    return train(cfg, train_examples, val_examples, log=log)
