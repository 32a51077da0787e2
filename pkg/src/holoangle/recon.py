"""Numerical reconstruction of holograms and focus-dependent sharpness."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import fileio
from .errors import ConfigurationError, DatasetIOError
from .holo import ComplexField, LeeHologram, OpticsConfig, lee_decode, propagate

LUMA = np.array([0.299, 0.587, 0.114])


@dataclass
class Reconstruction:
    amplitude: np.ndarray  # (H, W, 3), >= 0
    focus_distance_m: float
    source: str  # "complex" or "lee-decoded"


def _fields_of(cgh) -> tuple[list[ComplexField], str, OpticsConfig | None]:
    if isinstance(cgh, LeeHologram):
        return [lee_decode(ch) for ch in cgh.channels], "lee-decoded", cgh.optics
    if isinstance(cgh, ComplexField):
        return [cgh], "complex", None
    return list(cgh), "complex", None


def reconstruct(cgh, focus_distance_m: float, optics: OpticsConfig | None = None) -> Reconstruction:
    """Back-propagate every channel by ``focus_distance_m`` and keep the magnitude.

    ``cgh`` is a :class:`LeeHologram` or a sequence of complex fields. The
    focus must lie in [z_near / 2, 2 z_far] of the optics in use.
    """
    fields, source, own_optics = _fields_of(cgh)
    optics = optics or own_optics or OpticsConfig()
    lo, hi = optics.z_near_m / 2, 2 * optics.z_far_m
    if not lo <= focus_distance_m <= hi:
        raise ConfigurationError(f"focus {focus_distance_m} m outside [{lo}, {hi}] m")
    amp = np.stack([np.abs(propagate(f, -focus_distance_m).values) for f in fields], axis=-1)
    return Reconstruction(amplitude=amp, focus_distance_m=float(focus_distance_m), source=source)


def luminance(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        return image
    if image.shape[-1] == 1:
        return image[..., 0]
    return image @ LUMA


def sharpness(image: np.ndarray, region=None) -> float:
    """Tenengrad: mean squared Sobel gradient magnitude of the luminance inside ``region``.

    ``region`` is a pixel rectangle ``(row0, row1, col0, col1)``, half-open;
    ``None`` means the whole image.
    """
    lum = luminance(image)
    if region is not None:
        r0, r1, c0, c1 = (int(v) for v in region)
        if not (0 <= r0 <= r1 <= lum.shape[0] and 0 <= c0 <= c1 <= lum.shape[1]):
            raise ConfigurationError(f"region {region} outside image of shape {lum.shape}")
        lum = lum[r0:r1, c0:c1]
    if lum.size == 0:
        raise ConfigurationError("sharpness region is empty")
    gx = ndimage.sobel(lum, axis=1, mode="nearest")
    gy = ndimage.sobel(lum, axis=0, mode="nearest")
    return float(np.mean(gx * gx + gy * gy))


def object_regions(labels: np.ndarray, names=("front", "back")) -> dict[str, tuple[int, int, int, int]]:
    """Bounding rectangles of the visible pixels of objects 0, 1, ... from a label map."""
    regions = {}
    for i, name in enumerate(names):
        rows, cols = np.nonzero(labels == i)
        if rows.size:
            regions[name] = (int(rows.min()), int(rows.max()) + 1, int(cols.min()), int(cols.max()) + 1)
    return regions


@dataclass
class ScanPoint:
    distance_m: float
    peak_amplitude: float
    sharpness: dict[str, float] = field(default_factory=dict)


def focus_scan(cgh, distances, regions=None, optics: OpticsConfig | None = None) -> list[ScanPoint]:
    """Reconstruct at each distance and report peak amplitude and per-region sharpness.

    ``regions`` maps names to pixel rectangles; by default the whole image is
    scored as region ``"full"``.
    """
    distances = list(distances)
    if not distances:
        raise ConfigurationError("focus scan needs at least one distance")
    out = []
    for z in distances:
        rec = reconstruct(cgh, z, optics)
        regs = regions or {"full": None}
        scores = {name: sharpness(rec.amplitude, reg) for name, reg in regs.items()}
        out.append(ScanPoint(float(z), float(rec.amplitude.max()), scores))
    return out


def write_reconstruction(png_path, rec: Reconstruction) -> dict:
    """8-bit PNG normalised by the image maximum, plus a JSON sidecar with the constant."""
    png_path = Path(png_path)
    peak = float(rec.amplitude.max())
    scaled = rec.amplitude / peak if peak > 0 else rec.amplitude
    fileio.write_png(png_path, np.floor(np.clip(scaled, 0, 1) * 255 + 0.5))
    meta = {"normalization": peak, "focus_distance_m": rec.focus_distance_m, "source": rec.source}
    fileio.write_json(png_path.with_suffix(".json"), meta)
    return meta


def write_focus_scan(csv_path, scan: list[ScanPoint]) -> None:
    try:
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["distance_m", "sharpness_front", "sharpness_back"])
            for p in scan:
                w.writerow([repr(p.distance_m), repr(p.sharpness.get("front", float("nan"))),
                            repr(p.sharpness.get("back", float("nan")))])
    except OSError as exc:
        raise DatasetIOError(f"cannot write {csv_path}: {exc}") from exc
