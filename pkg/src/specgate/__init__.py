"""Dual-stream detector for AI-generated video.

A trainable spectral branch reads high-pass Fourier residuals, a frozen
semantic branch reads raw frames, and per-layer sigmoid gates let the
semantic context decide where spectral evidence is trustworthy.  Everything
(autodiff, FFT, transformer blocks, optimizer, data synthesis, metrics) is
implemented here from first principles on top of numpy arrays.
"""

from .autodiff import Tensor, backward, no_grad
from .checkpoint import load_checkpoint, save_checkpoint
from .config import (
    DetectorConfig, EncoderConfig, HeadConfig, default_config,
    full_scale_config,
)
from .datagen import gen_dataset, read_clip_frames
from .estimator import VideoAuthenticityClassifier
from .evaluation import evaluate_model, report_table
from .metrics import accuracy, average_precision, evaluate_scores, f1
from .model import VideoDetector
from .rng import Stream
from .spectral import (
    SpectralResidualExtractor, build_mask, extract_residual, normalize_residual,
)
from .training import load_examples, train, train_on_dataset

__version__ = "0.1.0"

__all__ = [
    "Tensor", "backward", "no_grad",
    "SpectralResidualExtractor", "build_mask", "extract_residual",
    "normalize_residual",
    "DetectorConfig", "EncoderConfig", "HeadConfig",
    "default_config", "full_scale_config",
    "VideoDetector", "VideoAuthenticityClassifier",
    "gen_dataset", "read_clip_frames",
    "load_examples", "train", "train_on_dataset",
    "save_checkpoint", "load_checkpoint",
    "evaluate_model", "report_table",
    "accuracy", "f1", "average_precision", "evaluate_scores",
    "Stream",
    "__version__",
]
