"""Binary weight files.

Layout (all integers little-endian uint32 unless noted):

    magic   b"SSNW"
    version uint32
    confl   uint32, then canonical config JSON (utf-8)
    hashl   uint32, then the config's sha256 hex digest (ascii)
    count   uint32, then per tensor, sorted by name:
        namel uint32, name utf-8
        ndim  uint32, dims uint32 each
        data  float32 little-endian, C order

Weights are stored as float32; loading widens back to float64, so a
save/load/save round trip reproduces the first file byte for byte.
"""
from __future__ import annotations

import json
import pathlib
import struct

import numpy as np

from .config import DetectorConfig
from .errors import CheckpointError, ConfigError
from .model import VideoDetector

__all__ = ["MAGIC", "VERSION", "save_checkpoint", "load_checkpoint"]

MAGIC = b"SSNW"
VERSION = 1


def _pack_str(text: str) -> bytes:
    raw = text.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def save_checkpoint(model: VideoDetector, path: pathlib.Path | str) -> None:
    path = pathlib.Path(path)
    chunks = [MAGIC, struct.pack("<I", VERSION)]
    config_json = model.cfg.to_json()
    chunks.append(_pack_str(config_json))
    chunks.append(_pack_str(model.cfg.config_hash()))
    params = model.parameters()
    chunks.append(struct.pack("<I", len(params)))
    for name in sorted(params):
        data = np.ascontiguousarray(params[name].data, dtype="<f4")
        chunks.append(_pack_str(name))
        chunks.append(struct.pack("<I", data.ndim))
        chunks.append(struct.pack(f"<{data.ndim}I", *data.shape))
        chunks.append(data.tobytes())
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.at = 0

    def take(self, n: int) -> bytes:
        if self.at + n > len(self.blob):
            raise CheckpointError("weight file is truncated")
        out = self.blob[self.at:self.at + n]
        self.at += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def text(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def load_checkpoint(path: pathlib.Path | str) -> VideoDetector:
    path = pathlib.Path(path)
    if not path.is_file():
        raise CheckpointError(f"no weight file at {path}")
    reader = _Reader(path.read_bytes())
    if reader.take(4) != MAGIC:
        raise CheckpointError(f"{path} is not a detector weight file")
    version = reader.u32()
    if version != VERSION:
        raise CheckpointError(f"unsupported weight file version {version}")
    config_json = reader.text()
    stored_hash = reader.text()
    try:
        cfg = DetectorConfig.from_dict(json.loads(config_json))
    except (json.JSONDecodeError, ConfigError) as err:
        raise CheckpointError(f"embedded config is invalid: {err}") from None
    if cfg.config_hash() != stored_hash:
        raise CheckpointError(
            "embedded config does not match its recorded hash; file is "
            "corrupt or was edited")

    model = VideoDetector(cfg)
    params = model.parameters()
    count = reader.u32()
    seen = set()
    for _ in range(count):
        name = reader.text()
        ndim = reader.u32()
        shape = struct.unpack(f"<{ndim}I", reader.take(4 * ndim))
        numel = int(np.prod(shape, dtype=np.int64)) if ndim else 1
        raw = reader.take(4 * numel)
        if name not in params:
            raise CheckpointError(f"unexpected tensor {name!r} in weight file")
        tensor = params[name]
        if tuple(tensor.data.shape) != shape:
            raise CheckpointError(
                f"tensor {name!r} has shape {shape}, model expects "
                f"{tuple(tensor.data.shape)}")
        values = np.frombuffer(raw, dtype="<f4").reshape(shape)
        tensor.data = values.astype(np.float64)
        seen.add(name)
    if reader.at != len(reader.blob):
        raise CheckpointError("trailing bytes after final tensor")
    missing = sorted(set(params) - seen)
    if missing:
        raise CheckpointError(f"weight file is missing tensors: {missing}")
    return model
