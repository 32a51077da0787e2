"""Depth and hologram quality metrics, and the training-time cost model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataValidationError


def _same_shape(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise DataValidationError(f"{what}: shape mismatch {a.shape} vs {b.shape}")


def mse(estimate, truth) -> float:
    """Mean squared error between two depth maps on the 0..255 byte scale,
    normalised to [0, 1] before squaring."""
    a = np.asarray(estimate, dtype=np.float64)
    b = np.asarray(truth, dtype=np.float64)
    _same_shape(a, b, "mse")
    diff = (a - b) / 255.0
    return float(np.mean(diff * diff))


def mse_bytes(estimate, truth) -> float:
    """Same error in byte units squared."""
    return mse(estimate, truth) * 255.0**2


def acc(a, b) -> float:
    """Normalised inner product of two non-negative brightness arrays.

    Sums run over every element, so colour images are handled by summing over
    channels too. Two all-zero inputs score 1, zero against non-zero scores 0.
    """
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    _same_shape(x, y, "acc")
    if np.any(x < 0) or np.any(y < 0):
        raise DataValidationError("acc expects non-negative brightness")
    sxx = float(np.sum(x * x))
    syy = float(np.sum(y * y))
    if sxx == 0 and syy == 0:
        return 1.0
    if sxx == 0 or syy == 0:
        return 0.0
    value = float(np.sum(x * y)) / np.sqrt(sxx * syy)
    return min(value, 1.0)


def cgh_acc(pred, truth) -> float:
    """acc over the Lee-plane brightness of two holograms (4 planes x 3 channels)."""
    if pred.optics != truth.optics:
        raise DataValidationError("cgh_acc: holograms were synthesized with different optics")
    p, t = pred.brightness(), truth.brightness()
    _same_shape(p, t, "cgh_acc")
    return acc(p, t)


@dataclass(frozen=True)
class MetricReport:
    depth_mse: float
    depth_acc: float
    cgh_acc: float

    def __post_init__(self):
        if not self.depth_mse >= 0:
            raise DataValidationError(f"depth_mse must be >= 0, got {self.depth_mse}")
        for name in ("depth_acc", "cgh_acc"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DataValidationError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class TimeModel:
    t_per_batch_s: float
    batches: int
    epochs: int

    def __post_init__(self):
        if self.t_per_batch_s < 0 or self.batches < 0 or self.epochs < 0:
            raise DataValidationError("time model fields must be non-negative")


def training_time(model: TimeModel) -> float:
    """Time per batch x number of batches x number of epochs, in seconds."""
    return model.t_per_batch_s * model.batches * model.epochs


def format_min_sec(seconds: float) -> str:
    """Render seconds as ``M' S''``, the layout used for stage-cost tables."""
    total = int(round(seconds))
    return f"{total // 60}' {total % 60}''"
