"""Procedural synthetic clip generation.

"Real" clips are natural-statistics composites: a 1/f^2 texture, smooth
color gradients, and a few soft shapes, translated across frames with
sub-pixel motion.  "Fake" clips start from the identical pipeline and add a
generator-style artifact: either a pair of low-amplitude frame-locked
sinusoids at fixed high frequencies ("grid") or nearest-neighbor 2x
upsampling from a half-resolution render ("upsample").

Dataset modes:
  standard          independent reals and fakes
  semantic_confound fakes share every content draw with a paired real, so the
                    two classes are pixel-identical except at the injected
                    frequencies
  noise_confound    reals additionally carry sparse bright speckle clusters
                    ("sparks"): benign, aperiodic high-frequency content

Everything is derived from the keyed counter RNG, so any clip can be
regenerated bitwise from (seed, mode, parameters) alone.
"""
from __future__ import annotations

import dataclasses
import json
import pathlib
from dataclasses import dataclass

import numpy as np

from . import fourier
from .errors import DataError
from .images import decode_frame, encode_frame, read_ppm, write_ppm
from .rng import Stream
from .spectral import NOMINAL_GRID, extract_residual, next_pow2, normalize_residual

__all__ = [
    "CONTENT_CLASSES", "DATASET_MODES", "ARTIFACT_KINDS",
    "GRID_FREQS", "GRID_AMPLITUDE",
    "Clip", "gen_real_clip", "gen_fake_clip", "gen_dataset",
    "grid_bins", "write_clip", "read_clip_frames", "load_manifest",
    "split_entries", "clip_to_streams",
]

CONTENT_CLASSES = ("disc", "square", "ring", "stripes")
DATASET_MODES = ("standard", "semantic_confound", "noise_confound")
ARTIFACT_KINDS = ("grid", "upsample")

# Grid artifact: nominal frequency radii on the 224 reference grid, scaled to
# the actual frame size at generation time (see grid_bins).
GRID_FREQS = (64.0, 80.0)
GRID_AMPLITUDE = 0.02      # fraction of the [0, 1] dynamic range
GRID_FLICKER = 0.3         # per-frame amplitude modulation, uniform +-30%

VELOCITY_MAX = 1.5         # px/frame, per axis
JITTER_STD = 0.15          # px, per axis, frames after the first
MIN_MARGIN = 16            # canvas padding reserved for motion

SPARK_DENSITY = 1.0 / 100  # sparks per pixel
SPARK_AMP = (0.2, 0.3)     # per-spark added brightness
SPARK_CLUSTER_FRAC = 1 / 6  # cluster sigma as a fraction of frame size

TEXTURE_WEIGHT = 0.09
STATS_TOLERANCE = 0.05

# Per-clip tone target (an auto-exposure analog).  Normalizing every clip to
# the same mean/contrast keeps the two classes' marginal pixel statistics
# overlapping at any dataset size, so brightness can never become a shortcut.
TONE_MEAN = 0.55
TONE_STD = 0.11


@dataclass
class Clip:
    frames: np.ndarray          # [T, S, S, 3] uint8
    label: int                  # 0 real, 1 fake
    mode: str
    seed: int
    content_class: int
    velocity: tuple[float, float]
    artifact: dict | None = None
    sparks: list | None = None  # per frame: list of [y, x] int pairs

    @property
    def class_name(self) -> str:
        return CONTENT_CLASSES[self.content_class]


def grid_bins(size: int) -> tuple[int, int]:
    """Integer frequency bins of the grid artifact at frame size `size`."""
    return tuple(int(round(f * size / NOMINAL_GRID)) for f in GRID_FREQS)


def _canvas_size(size: int) -> int:
    return next_pow2(size + 2 * MIN_MARGIN)


def _texture(stream: Stream, canvas: int) -> np.ndarray:
    """Zero-mean, unit-variance field with power spectrum ~ 1/f^2."""
    re = stream.child("re").normal((canvas, canvas))
    im = stream.child("im").normal((canvas, canvas))
    k = np.minimum(np.arange(canvas), canvas - np.arange(canvas)).astype(np.float64)
    radial = np.sqrt(k[:, None] ** 2 + k[None, :] ** 2)
    radial[0, 0] = np.inf  # no DC component
    spectrum = (re + 1j * im) / radial
    field = fourier.ifft2(spectrum).real  # real part = Hermitian projection
    field -= field.mean()
    std = field.std()
    return field / std if std > 0 else field


def _soft_edge(x: np.ndarray, width: float = 1.5) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x / width, -40.0, 40.0)))


def _shape_mask(kind: str, yy: np.ndarray, xx: np.ndarray, cy: float, cx: float,
                radius: float, angle: float) -> np.ndarray:
    dy, dx = yy - cy, xx - cx
    r = np.sqrt(dy * dy + dx * dx)
    if kind == "disc":
        return _soft_edge(radius - r)
    if kind == "square":
        u = np.cos(angle) * dx + np.sin(angle) * dy
        v = -np.sin(angle) * dx + np.cos(angle) * dy
        return _soft_edge(radius - np.abs(u)) * _soft_edge(radius - np.abs(v))
    if kind == "ring":
        return _soft_edge(radius - r) * _soft_edge(r - 0.6 * radius)
    # stripes: a disc window carrying a low-frequency stripe pattern
    wavelength = max(8.0, 0.9 * radius)
    u = np.cos(angle) * dx + np.sin(angle) * dy
    stripes = 0.5 * (1.0 + np.cos(2.0 * np.pi * u / wavelength))
    return _soft_edge(radius - r) * (0.25 + 0.75 * stripes)


def _content_canvas(content: Stream, canvas: int, size: int,
                    content_class: int) -> np.ndarray:
    """[3, canvas, canvas] float image in roughly [0.1, 0.9]."""
    tex = _texture(content.child("texture"), canvas)
    coords = np.arange(canvas, dtype=np.float64)
    yy, xx = coords[:, None], coords[None, :]
    unit_y, unit_x = yy / canvas - 0.5, xx / canvas - 0.5

    chan = content.child("channels")
    base = chan.child("base").uniform((3,), 0.49, 0.61)
    grad = chan.child("gradient").uniform((3, 2), -0.12, 0.12)
    tex_w = TEXTURE_WEIGHT * chan.child("texture_w").uniform((3,), 0.8, 1.2)
    img = (base[:, None, None]
           + grad[:, 0, None, None] * unit_y + grad[:, 1, None, None] * unit_x
           + tex_w[:, None, None] * tex)

    shapes = content.child("shapes")
    count = 2 + int(shapes.child("count").integers(1, 3)[0])
    kind = CONTENT_CLASSES[content_class]
    # centers inside the visible crop window, so the shapes stay on screen
    lo = (canvas - size) / 2.0
    hi = lo + size
    for s in range(count):
        one = shapes.child("shape", s)
        cy, cx = one.child("center").uniform((2,), lo, hi)
        radius = float(one.child("radius").uniform((), size / 7.0, size / 3.0))
        angle = float(one.child("angle").uniform((), 0.0, np.pi))
        color = one.child("color").uniform((3,), 0.15, 0.85)
        alpha = float(one.child("alpha").uniform((), 0.5, 0.9))
        mask = alpha * _shape_mask(kind, yy, xx, cy, cx, radius, angle)
        img = img * (1.0 - mask) + color[:, None, None] * mask
    return img


def _sample_window(canvas_img: np.ndarray, size: int,
                   offset: np.ndarray) -> np.ndarray:
    """Bilinear crop of a [3, C, C] canvas at a sub-pixel offset."""
    c = canvas_img.shape[-1]
    origin = (c - size) // 2
    ys = origin + offset[0] + np.arange(size)
    xs = origin + offset[1] + np.arange(size)
    iy = np.floor(ys).astype(np.int64)
    ix = np.floor(xs).astype(np.int64)
    if iy.min() < 0 or ix.min() < 0 or iy.max() + 1 >= c or ix.max() + 1 >= c:
        raise DataError("motion exceeds canvas margin; fewer frames or a "
                        "larger canvas is required")
    fy = (ys - iy)[None, :, None]
    fx = (xs - ix)[None, None, :]
    tl = canvas_img[:, iy[:, None], ix[None, :]]
    tr = canvas_img[:, iy[:, None], ix[None, :] + 1]
    bl = canvas_img[:, iy[:, None] + 1, ix[None, :]]
    br = canvas_img[:, iy[:, None] + 1, ix[None, :] + 1]
    return ((1 - fy) * (1 - fx) * tl + (1 - fy) * fx * tr
            + fy * (1 - fx) * bl + fy * fx * br)


def _motion_offsets(motion: Stream, frames: int,
                    scale: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    velocity = motion.child("velocity").uniform((2,), -VELOCITY_MAX, VELOCITY_MAX)
    jitter = motion.child("jitter").normal((frames, 2), 0.0, JITTER_STD)
    jitter[0] = 0.0  # the first frame is the un-jittered reference
    velocity = velocity * scale
    offsets = velocity[None, :] * np.arange(frames)[:, None] + jitter * scale
    return offsets, velocity


def _render_content(stream: Stream, frames: int, size: int,
                    motion_scale: float = 1.0):
    """Shared content pipeline: float frames [T, 3, size, size] plus meta."""
    if frames < 1:
        raise DataError("frames must be >= 1")
    content = stream.child("content")
    content_class = int(content.child("class").integers(1, len(CONTENT_CLASSES))[0])
    canvas = _canvas_size(size)
    canvas_img = _content_canvas(content, canvas, size, content_class)
    offsets, velocity = _motion_offsets(content.child("motion"), frames,
                                        motion_scale)
    rendered = np.stack([_sample_window(canvas_img, size, offsets[t])
                         for t in range(frames)])
    return rendered, content_class, velocity


def _add_sparks(stream: Stream, float_frames: np.ndarray) -> list:
    """Bright speckle clusters on every frame; returns per-frame coordinates."""
    frames, _, size, _ = float_frames.shape
    count = max(8, int(round(size * size * SPARK_DENSITY)))
    center = stream.child("center").uniform((2,), 0.25 * size, 0.75 * size)
    sigma = SPARK_CLUSTER_FRAC * size
    coords_out = []
    for t in range(frames):
        per = stream.child("frame", t)
        pts = center[None, :] + per.child("coords").normal((count, 2), 0.0, sigma)
        pts = np.clip(np.rint(pts).astype(np.int64), 0, size - 1)
        amps = per.child("amps").uniform((count,), SPARK_AMP[0], SPARK_AMP[1])
        for c in range(3):
            np.add.at(float_frames[t, c], (pts[:, 0], pts[:, 1]), amps)
        coords_out.append([[int(y), int(x)] for y, x in pts])
    return coords_out


def _tone_normalize(float_frames: np.ndarray) -> np.ndarray:
    """One affine correction per clip, to mean TONE_MEAN / std TONE_STD."""
    mu = float_frames.mean()
    std = float_frames.std()
    scale = TONE_STD / std if std > 0 else 1.0
    return (float_frames - mu) * scale + TONE_MEAN


def _quantize(float_frames: np.ndarray) -> np.ndarray:
    """[T, 3, S, S] float -> [T, S, S, 3] uint8."""
    return np.stack([encode_frame(f.transpose(1, 2, 0)) for f in float_frames])


def gen_real_clip(seed: int, frames: int = 4, size: int = 64,
                  sparks: bool = False) -> Clip:
    stream = Stream(seed)
    rendered, content_class, velocity = _render_content(stream, frames, size)
    spark_coords = _add_sparks(stream.child("sparks"), rendered) if sparks else None
    return Clip(frames=_quantize(_tone_normalize(rendered)), label=0,
                mode="real_spark" if sparks else "real", seed=seed,
                content_class=content_class,
                velocity=(float(velocity[0]), float(velocity[1])),
                sparks=spark_coords)


def _grid_pattern(size: int, phases: np.ndarray) -> np.ndarray:
    """Two unit sinusoids on exact integer bins (0, f1) and (f2, 0)."""
    f1, f2 = grid_bins(size)
    x = np.arange(size, dtype=np.float64)
    along_x = np.cos(2.0 * np.pi * f1 * x / size + phases[0])[None, :]
    along_y = np.cos(2.0 * np.pi * f2 * x / size + phases[1])[:, None]
    return along_x + along_y


def gen_fake_clip(seed: int, frames: int = 4, size: int = 64,
                  artifact: str = "grid",
                  amplitude: float = GRID_AMPLITUDE) -> Clip:
    if artifact not in ARTIFACT_KINDS:
        raise DataError(f"unknown artifact kind {artifact!r}; "
                        f"choose from {ARTIFACT_KINDS}")
    stream = Stream(seed)
    if artifact == "grid":
        rendered, content_class, velocity = _render_content(stream, frames, size)
        art = stream.child("artifact")
        phases = art.child("phase").uniform((2,), 0.0, 2.0 * np.pi)
        flicker = art.child("flicker").uniform((frames,), -GRID_FLICKER,
                                               GRID_FLICKER)
        pattern = _grid_pattern(size, phases)
        for t in range(frames):
            rendered[t] += amplitude * (1.0 + flicker[t]) * pattern[None, :, :]
        f1, f2 = grid_bins(size)
        descriptor = {"kind": "grid", "bins": [f1, f2],
                      "nominal_freqs": list(GRID_FREQS),
                      "amplitude": amplitude, "flicker": GRID_FLICKER,
                      "phases": [float(phases[0]), float(phases[1])]}
    else:
        if size % 2 != 0:
            raise DataError("upsample artifact requires an even frame size")
        half, content_class, velocity = _render_content(
            stream, frames, size // 2, motion_scale=0.5)
        rendered = np.repeat(np.repeat(half, 2, axis=2), 2, axis=3)
        velocity = velocity * 2.0  # report in full-resolution pixels
        descriptor = {"kind": "upsample", "factor": 2}
    return Clip(frames=_quantize(_tone_normalize(rendered)), label=1,
                mode=artifact, seed=seed,
                content_class=content_class,
                velocity=(float(velocity[0]), float(velocity[1])),
                artifact=descriptor)


# --------------------------------------------------------------------------
# Dataset assembly and on-disk layout:
#   <root>/<split>/<clip_id>/frame_0000.ppm ... + meta.json, manifest.json
# --------------------------------------------------------------------------

def write_clip(clip: Clip, clip_dir: pathlib.Path) -> None:
    clip_dir.mkdir(parents=True, exist_ok=True)
    for t in range(clip.frames.shape[0]):
        write_ppm(clip_dir / f"frame_{t:04d}.ppm", clip.frames[t])
    meta = dataclasses.asdict(clip)
    del meta["frames"]
    (clip_dir / "meta.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def read_clip_frames(clip_dir: pathlib.Path | str) -> np.ndarray:
    clip_dir = pathlib.Path(clip_dir)
    paths = sorted(clip_dir.glob("frame_*.ppm"))
    if not paths:
        raise DataError(f"no frames found in {clip_dir}")
    return np.stack([read_ppm(p) for p in paths])


def _derive_seed(master: Stream, *tags) -> int:
    return int(master.child(*tags).raw(1)[0])


def _clip_stats(frames_uint8: np.ndarray) -> tuple[list, list]:
    per = frames_uint8.astype(np.float64) / 255.0
    means = [float(f.mean()) for f in per]
    variances = [float(f.var()) for f in per]
    return means, variances


def _check_stats(real_means, real_vars, fake_means, fake_vars) -> dict:
    stats = {
        "real_mean": float(np.median(real_means)),
        "fake_mean": float(np.median(fake_means)),
        "real_var": float(np.median(real_vars)),
        "fake_var": float(np.median(fake_vars)),
    }
    for a, b, what in ((stats["real_mean"], stats["fake_mean"], "mean"),
                       (stats["real_var"], stats["fake_var"], "variance")):
        gap = abs(a - b) / max(abs(a), abs(b), 1e-12)
        if gap >= STATS_TOLERANCE:
            raise DataError(
                f"class {what} medians differ by {gap:.1%} (>= "
                f"{STATS_TOLERANCE:.0%}): real={a:.5f} fake={b:.5f}; "
                "the dataset would admit a trivial brightness shortcut")
    return stats


def gen_dataset(root: pathlib.Path | str, mode: str = "standard",
                counts: int = 48, seed: int = 0, frames: int = 4,
                size: int = 64, artifact: str = "grid") -> dict:
    """Generate `counts` real + `counts` fake clips and write a manifest.

    Per class, the first 2*counts//3 clips are the train split and the rest
    the test split (disjoint seed ranges by construction).  Returns the
    manifest dict that was written.
    """
    if mode not in DATASET_MODES:
        raise DataError(f"unknown dataset mode {mode!r}; choose from {DATASET_MODES}")
    if artifact not in ARTIFACT_KINDS:
        raise DataError(f"unknown artifact kind {artifact!r}")
    if counts < 1:
        raise DataError("counts must be >= 1")
    root = pathlib.Path(root)
    master = Stream(seed)
    n_train = (2 * counts) // 3

    entries = []
    real_means, real_vars, fake_means, fake_vars = [], [], [], []
    for i in range(counts):
        split = "train" if i < n_train else "test"
        if mode == "semantic_confound":
            pair_seed = _derive_seed(master, "pair", i)
            real_seed = fake_seed = pair_seed
            pair: int | None = i
        else:
            real_seed = _derive_seed(master, "real", i)
            fake_seed = _derive_seed(master, "fake", i)
            pair = None

        real = gen_real_clip(real_seed, frames=frames, size=size,
                             sparks=(mode == "noise_confound"))
        fake = gen_fake_clip(fake_seed, frames=frames, size=size,
                             artifact=artifact)
        for clip, name in ((real, f"real_{i:04d}"), (fake, f"fake_{i:04d}")):
            rel = f"{split}/{name}"
            write_clip(clip, root / rel)
            entries.append({
                "path": rel, "label": clip.label, "mode": mode,
                "seed": clip.seed, "split": split,
                "content_class": clip.content_class, "pair": pair,
            })
        m, v = _clip_stats(real.frames)
        real_means += m
        real_vars += v
        m, v = _clip_stats(fake.frames)
        fake_means += m
        fake_vars += v

    stats = _check_stats(real_means, real_vars, fake_means, fake_vars)
    manifest = {
        "version": 1,
        "mode": mode,
        "seed": seed,
        "counts": counts,
        "frames": frames,
        "size": size,
        "artifact": artifact,
        "splits": {"train": 2 * n_train, "test": 2 * (counts - n_train)},
        "stats": stats,
        "clips": entries,
    }
    (root / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return manifest


def load_manifest(root: pathlib.Path | str) -> dict:
    path = pathlib.Path(root) / "manifest.json"
    if not path.is_file():
        raise DataError(f"no manifest.json under {root}")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise DataError(f"manifest is not valid JSON: {err}") from None
    if not isinstance(manifest, dict) or "clips" not in manifest:
        raise DataError("manifest must be an object with a 'clips' list")
    return manifest


def split_entries(manifest: dict, split: str) -> list[dict]:
    return [e for e in manifest["clips"] if e["split"] == split]


def clip_to_streams(frames_uint8: np.ndarray, radius: float,
                    max_frames: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """[T, S, S, 3] uint8 -> (semantic, spectral) model inputs, [T, 3, S, S].

    The semantic stream is the per-channel standardized raw frame; the
    spectral stream is the standardized high-pass residual at `radius`.
    """
    if max_frames is not None:
        if frames_uint8.shape[0] < max_frames:
            raise DataError(
                f"clip has {frames_uint8.shape[0]} frames, need {max_frames}")
        frames_uint8 = frames_uint8[:max_frames]
    sem, spec = [], []
    for frame in frames_uint8:
        decoded = decode_frame(frame)
        sem.append(normalize_residual(decoded.transpose(2, 0, 1)))
        spec.append(normalize_residual(extract_residual(decoded, radius)))
    return np.stack(sem), np.stack(spec)
