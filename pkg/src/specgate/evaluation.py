"""Scoring generated datasets and reporting metrics.

A report covers one dataset split: every clip is scored (optionally after a
pixel-space perturbation), clips are grouped by their manifest mode tag,
and each group gets {Acc, F1, AP} plus a macro mean across groups.
"""
from __future__ import annotations

import json
import pathlib

import numpy as np

from .datagen import clip_to_streams, load_manifest, read_clip_frames, split_entries
from .errors import DataError
from .images import decode_frame, encode_frame
from .metrics import evaluate_scores
from .model import VideoDetector

__all__ = ["perturb_clip", "score_manifest", "evaluate_model",
           "report_table", "write_report"]


def perturb_clip(frames_uint8: np.ndarray, perturbation) -> np.ndarray:
    """Apply a frame perturbation in pixel space, requantizing to uint8."""
    if perturbation is None:
        return frames_uint8
    return np.stack([encode_frame(perturbation(decode_frame(f)))
                     for f in frames_uint8])


def score_manifest(model: VideoDetector, root, split: str = "test",
                   perturbation=None, batch_size: int = 16) -> list[dict]:
    """Score every clip of one split; returns manifest-ordered records.

    Each record is {"path", "label", "mode", "score"}.
    """
    root = pathlib.Path(root)
    manifest = load_manifest(root)
    entries = split_entries(manifest, split)
    if not entries:
        raise DataError(f"dataset {root} has no {split!r} clips")
    cfg = model.cfg
    sems, specs = [], []
    for entry in entries:
        raw = read_clip_frames(root / entry["path"])
        raw = perturb_clip(raw, perturbation)
        sem, spec = clip_to_streams(raw, cfg.radius,
                                    max_frames=cfg.head.frames)
        sems.append(sem)
        specs.append(spec)
    records = []
    for start in range(0, len(entries), batch_size):
        stop = min(start + batch_size, len(entries))
        sem = (np.stack(sems[start:stop])
               if model.encoder.semantic is not None else None)
        spec = (np.stack(specs[start:stop])
                if model.encoder.spectral is not None else None)
        scores = model.score_clips(sem, spec)
        for entry, score in zip(entries[start:stop], scores):
            records.append({"path": entry["path"],
                            "label": int(entry["label"]),
                            "mode": entry["mode"],
                            "score": float(score)})
    return records


def evaluate_model(model: VideoDetector, root, split: str = "test",
                   perturbation=None, batch_size: int = 16) -> dict:
    """Full report: per-mode-subset {acc, f1, ap}, macro mean, clip scores."""
    records = score_manifest(model, root, split, perturbation, batch_size)
    subsets: dict[str, tuple[list, list]] = {}
    for rec in records:
        scores, labels = subsets.setdefault(rec["mode"], ([], []))
        scores.append(rec["score"])
        labels.append(rec["label"])
    report = evaluate_scores(subsets)
    report["clips"] = {rec["path"]: {"score": rec["score"],
                                     "label": rec["label"]}
                       for rec in records}
    return report


def report_table(report: dict) -> str:
    """Aligned plain-text table of the subset rows plus the mean row."""
    rows = [(name, vals) for name, vals in sorted(report["subsets"].items())]
    rows.append(("mean", report["mean"]))
    width = max(len("subset"), *(len(name) for name, _ in rows))
    lines = [f"{'subset':<{width}}     Acc      F1      AP"]
    for name, vals in rows:
        lines.append(f"{name:<{width}}  {vals['acc']:6.4f}  "
                     f"{vals['f1']:6.4f}  {vals['ap']:6.4f}")
    return "\n".join(lines) + "\n"


def write_report(report: dict, path) -> None:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
