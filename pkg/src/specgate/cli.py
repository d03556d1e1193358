"""Command-line interface: one executable, nine subcommands.

Exit codes: 0 success, 1 usage error (bad flags), 2 data/model error
(missing files, malformed inputs, incompatible checkpoints).  All file
outputs are byte-stable across reruns with identical inputs; only the
measured FPS field of `bench` varies with wall-clock time.
"""
from __future__ import annotations

import argparse
import json
import pathlib
import sys

import numpy as np

from .bench import run_bench
from .checkpoint import load_checkpoint, save_checkpoint
from .config import VARIANT_ALIASES, DetectorConfig, default_config
from .datagen import (DATASET_MODES, clip_to_streams, gen_dataset,
                      load_manifest, read_clip_frames, split_entries)
from .errors import DataError, SpecGateError
from .evaluation import evaluate_model, report_table, write_report
from .fourier import fft2, fftshift
from .gatemaps import render_gate_maps
from .images import (decode_frame, read_ppm, rescale_for_view, write_ppm,
                     write_raw_grid)
from .metrics import evaluate_scores
from .perturb import parse_perturbation
from .spectral import (apply_mask, build_mask, effective_radius,
                       extract_residual, next_pow2, pad_to_pow2)
from .training import load_examples, score_examples, train, train_on_dataset

__all__ = ["main", "build_parser"]

ABLATION_ORDER = ("sem", "spec", "concat", "gated")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems via exception, not sys.exit."""

    def error(self, message):
        raise _UsageError(message)


# --- config plumbing ---------------------------------------------------------

def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


_CONFIG_FLAGS = ("radius", "variant", "epochs", "lr", "weight_decay",
                 "batch_size", "seed", "pretrain_epochs")


def _config_dict(args, manifest: dict | None = None) -> dict:
    """Config file -> flat CLI flag overrides -> dataset geometry defaults."""
    merged: dict = {}
    path = getattr(args, "config", None)
    if path:
        path = pathlib.Path(path)
        if not path.is_file():
            raise DataError(f"no config file at {path}")
        try:
            merged = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as err:
            raise DataError(f"config file is not valid JSON: {err}") from None
        if not isinstance(merged, dict):
            raise DataError("config file must hold a JSON object")
    flags = {}
    for name in _CONFIG_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            flags[name] = value
    merged = _deep_merge(merged, flags)
    frames_flag = getattr(args, "frames", None)
    if frames_flag is not None:
        merged = _deep_merge(merged, {"head": {"frames": frames_flag}})
    if manifest is not None:
        geometry: dict = {}
        if "input_size" not in merged.get("encoder", {}):
            geometry["encoder"] = {"input_size": int(manifest["size"])}
        if "frames" not in merged.get("head", {}):
            geometry["head"] = {"frames": int(manifest["frames"])}
        merged = _deep_merge(geometry, merged)
    return merged


def _build_config(args, manifest: dict | None = None) -> DetectorConfig:
    return default_config(**_config_dict(args, manifest))


# --- subcommand handlers ------------------------------------------------------

def cmd_gen_data(args) -> int:
    out = pathlib.Path(args.out)
    if out.exists() and any(out.iterdir()) and not args.force:
        raise DataError(
            f"{out} already exists and is not empty; pass --force to "
            f"regenerate over it")
    mode = args.mode.replace("-", "_")
    manifest = gen_dataset(out, mode=mode, counts=args.clips, seed=args.seed,
                           frames=args.frames, size=args.size,
                           artifact=args.artifact)
    print(f"wrote {len(manifest['clips'])} clips "
          f"({args.clips} real + {args.clips} generated) to {out}")
    return 0


def cmd_extract_spectral(args) -> int:
    frame = decode_frame(read_ppm(args.infile))
    residual = extract_residual(frame, args.radius)
    write_ppm(args.out, rescale_for_view(residual).transpose(1, 2, 0))
    if args.raw:
        write_raw_grid(args.raw, residual)
    if args.dump_spectrum:
        channels = np.ascontiguousarray(frame.transpose(2, 0, 1))
        padded, _ = pad_to_pow2(channels)
        extent = padded.shape[-1]
        mask = build_mask(extent, extent,
                          effective_radius(args.radius, extent))
        spectrum = apply_mask(fftshift(fft2(padded)), mask)
        logmag = np.log1p(np.abs(spectrum)).mean(axis=0)
        gray = rescale_for_view(logmag)
        write_ppm(args.dump_spectrum, np.stack([gray, gray, gray], axis=2))
    return 0


def cmd_train(args) -> int:
    manifest = load_manifest(args.data)
    cfg = _build_config(args, manifest)
    model, history = train_on_dataset(cfg, args.data, log=print,
                                      validate=not args.no_val)
    save_checkpoint(model, args.out)
    final = history[-1] if history else {"loss": None, "val_acc": None}
    print(f"saved {args.out} (final loss "
          f"{final['loss']}, val acc {final['val_acc']})")
    return 0


def cmd_eval(args) -> int:
    model = load_checkpoint(args.model)
    name, fn = parse_perturbation(args.perturb)
    perturbation = None if name == "none" else fn
    report = evaluate_model(model, args.data, split=args.split,
                            perturbation=perturbation)
    report["perturbation"] = name
    print(report_table(report), end="")
    if args.out:
        write_report(report, args.out)
    return 0


def cmd_infer(args) -> int:
    model = load_checkpoint(args.model)
    cfg = model.cfg
    for clip_dir in args.clips:
        frames = read_clip_frames(clip_dir)
        sem, spec = clip_to_streams(frames, cfg.radius,
                                    max_frames=cfg.head.frames)
        score = model.score_clips(
            sem[None] if model.encoder.semantic is not None else None,
            spec[None] if model.encoder.spectral is not None else None)
        clip_id = str(clip_dir).rstrip("/")
        print(f"{clip_id} {float(score[0])!r}")
    return 0


def _grouped_scores(entries: list[dict], scores: np.ndarray) -> dict:
    subsets: dict[str, tuple[list, list]] = {}
    for entry, score in zip(entries, scores):
        bucket = subsets.setdefault(entry["mode"], ([], []))
        bucket[0].append(float(score))
        bucket[1].append(int(entry["label"]))
    return subsets


def cmd_ablate(args) -> int:
    manifest = load_manifest(args.data)
    base = _config_dict(args, manifest)
    base_cfg = default_config(**base)
    train_ex = load_examples(args.data, base_cfg.radius,
                             base_cfg.head.frames, "train")
    test_ex = load_examples(args.data, base_cfg.radius,
                            base_cfg.head.frames, "test")
    entries = split_entries(manifest, "test")
    results = {}
    for alias in ABLATION_ORDER:
        cfg = default_config(**_deep_merge(base, {"variant": alias}))
        model, _ = train(cfg, train_ex)
        scores = score_examples(model, test_ex, cfg.batch_size)
        results[alias] = evaluate_scores(_grouped_scores(entries, scores))

    subset_names = sorted(results[ABLATION_ORDER[0]]["subsets"])
    groups = subset_names + ["Average"]
    header = "variant " + " ".join(f"{g}:Acc {g}:F1" for g in groups)
    lines = [header]
    for alias in ABLATION_ORDER:
        rep = results[alias]
        cells = []
        for name in subset_names:
            cells.append(f"{rep['subsets'][name]['acc']:10.4f}")
            cells.append(f"{rep['subsets'][name]['f1']:9.4f}")
        cells.append(f"{rep['mean']['acc']:11.4f}")
        cells.append(f"{rep['mean']['f1']:10.4f}")
        lines.append(f"{alias:<7}" + " ".join(cells))
    print("\n".join(lines))
    if args.out:
        write_report({"variants": results,
                      "row_order": list(ABLATION_ORDER)}, args.out)
    return 0


def cmd_sweep_radius(args) -> int:
    manifest = load_manifest(args.data)
    radii = args.radii
    models = []
    if args.train_each:
        base = _config_dict(args, manifest)
        for r in radii:
            cfg = default_config(**_deep_merge(base, {"radius": r}))
            model, _ = train_on_dataset(cfg, args.data, validate=False)
            models.append(model)
    else:
        if not args.models or len(args.models) != len(radii):
            raise _UsageError(
                "without --train-each, pass --models with one checkpoint "
                "per radius")
        for r, path in zip(radii, args.models):
            model = load_checkpoint(path)
            if model.cfg.radius != r:
                raise DataError(
                    f"checkpoint {path} was trained at radius "
                    f"{model.cfg.radius}, not {r}")
            models.append(model)

    extent = next_pow2(int(manifest["size"]))
    rows = []
    for r, model in zip(radii, models):
        mask = build_mask(extent, extent, effective_radius(r, extent))
        report = evaluate_model(model, args.data, split="test")
        rows.append({"radius": r,
                     "mask_fraction": mask.masked_fraction,
                     "masked_bins": mask.masked_count,
                     "acc": report["mean"]["acc"],
                     "f1": report["mean"]["f1"],
                     "ap": report["mean"]["ap"]})
    lines = ["radius  mask_fraction         Acc      F1      AP"]
    for row in rows:
        lines.append(f"{row['radius']:<7g} {row['mask_fraction']!r:<20} "
                     f"{row['acc']:6.4f}  {row['f1']:6.4f}  {row['ap']:6.4f}")
    print("\n".join(lines))
    if args.out:
        write_report({"rows": rows}, args.out)
    return 0


def cmd_gate_maps(args) -> int:
    model = load_checkpoint(args.model)
    frames = read_clip_frames(args.clip)
    paths = render_gate_maps(model, frames, args.layer, args.out)
    for path in paths:
        print(path)
    return 0


def cmd_bench(args) -> int:
    cfg = _build_config(args)
    report = run_bench(cfg, args.timed_frames)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


# --- parser -------------------------------------------------------------------

def _add_config_flags(sub, frames_help="frames per clip fed to the model"):
    sub.add_argument("--config", help="JSON file mirroring the full config")
    sub.add_argument("--radius", type=float, help="high-pass cutoff on the "
                     "nominal 224 grid")
    sub.add_argument("--variant",
                     choices=sorted(set(VARIANT_ALIASES)
                                    | set(VARIANT_ALIASES.values())),
                     help="model variant")
    sub.add_argument("--epochs", type=int, help="training epochs")
    sub.add_argument("--lr", type=float, help="Adam learning rate")
    sub.add_argument("--weight-decay", type=float, dest="weight_decay",
                     help="coupled L2 strength")
    sub.add_argument("--batch-size", type=int, dest="batch_size",
                     help="clips per optimizer step")
    sub.add_argument("--seed", type=int, help="master seed")
    sub.add_argument("--pretrain-epochs", type=int, dest="pretrain_epochs",
                     help="semantic pretraining epochs")
    sub.add_argument("--frames", type=int, help=frames_help)


def build_parser() -> _Parser:
    parser = _Parser(prog="specgate",
                     description="Dual-stream spectral/semantic detector "
                                 "for AI-generated video")
    commands = parser.add_subparsers(dest="command", required=True,
                                     metavar="command")

    p = commands.add_parser("gen-data",
                            help="generate a labeled synthetic clip dataset")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--mode",
                   choices=[m.replace("_", "-") for m in DATASET_MODES],
                   default="standard", help="dataset regime")
    p.add_argument("--clips", type=int, default=48,
                   help="clips per class (dataset holds 2x this)")
    p.add_argument("--frames", type=int, default=4, help="frames per clip")
    p.add_argument("--size", type=int, default=64, help="frame edge length")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--artifact", choices=("grid", "upsample"),
                   default="grid", help="artifact family for generated clips")
    p.add_argument("--force", action="store_true",
                   help="allow writing into an existing non-empty directory")
    p.set_defaults(func=cmd_gen_data)

    p = commands.add_parser("extract-spectral",
                            help="high-pass spectral residual of one frame")
    p.add_argument("--in", dest="infile", required=True,
                   help="input frame (P6 PPM)")
    p.add_argument("--radius", type=float, default=32.0,
                   help="high-pass cutoff on the nominal 224 grid")
    p.add_argument("--out", required=True,
                   help="residual image output (viewing-rescaled PPM)")
    p.add_argument("--raw", help="also write the exact residual values "
                                 "(binary float64 grid)")
    p.add_argument("--dump-spectrum",
                   dest="dump_spectrum",
                   help="also write the masked log-magnitude spectrum (PPM)")
    p.set_defaults(func=cmd_extract_spectral)

    p = commands.add_parser("train", help="train a detector on a dataset")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--no-val", action="store_true", dest="no_val",
                   help="skip per-epoch validation on the test split")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = commands.add_parser("eval", help="score a dataset split and report "
                                         "Acc/F1/AP per subset")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--model", required=True, help="checkpoint path")
    p.add_argument("--split", default="test", help="manifest split to score")
    p.add_argument("--perturb", default="none",
                   help="none | blur:SIGMA | compress:QUALITY")
    p.add_argument("--out", help="also write the JSON report here")
    p.set_defaults(func=cmd_eval)

    p = commands.add_parser("infer", help="print `clip_id p_fake` per clip")
    p.add_argument("--model", required=True, help="checkpoint path")
    p.add_argument("clips", nargs="+", metavar="CLIP_DIR",
                   help="clip directories of numbered PPM frames")
    p.set_defaults(func=cmd_infer)

    p = commands.add_parser("ablate",
                            help="train and compare all four variants with "
                                 "a shared seed")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", help="also write the JSON comparison here")
    _add_config_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = commands.add_parser("sweep-radius",
                            help="mask fraction and metrics per cutoff "
                                 "radius")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--radii", type=_float_list, default=[0.0, 16.0, 32.0, 112.0],
                   help="comma-separated radii on the nominal 224 grid")
    p.add_argument("--train-each", action="store_true", dest="train_each",
                   help="train one model per radius")
    p.add_argument("--models", type=_path_list,
                   help="comma-separated checkpoints, one per radius")
    p.add_argument("--out", help="also write the JSON table here")
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep_radius)

    p = commands.add_parser("gate-maps",
                            help="render per-layer gate/feature heatmaps")
    p.add_argument("--clip", required=True, help="clip directory")
    p.add_argument("--model", required=True,
                   help="checkpoint path (gated variant)")
    p.add_argument("--layer", type=int, required=True,
                   help="encoder layer index")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gate_maps)

    p = commands.add_parser("bench",
                            help="analytic MAC counts and measured FPS")
    p.add_argument("--timed-frames", "--bench-frames", dest="timed_frames",
                   type=int, default=32,
                   help="number of warm inference frames to time")
    _add_config_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}") from None


def _path_list(text: str) -> list[str]:
    return [part for part in text.split(",") if part != ""]


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except SystemExit as err:  # argparse exits itself for --help
        return int(err.code or 0)
    try:
        return args.func(args)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except SpecGateError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
