"""Small image and JSON helpers used by the dataset and hologram writers."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DatasetIOError


def write_pgm(path, array: np.ndarray) -> None:
    """Write an 8-bit grayscale image as binary PGM (P5)."""
    array = np.asarray(array)
    if array.ndim != 2 or array.dtype != np.uint8:
        raise ValueError("PGM planes must be 2-D uint8 arrays")
    header = f"P5\n{array.shape[1]} {array.shape[0]}\n255\n".encode("ascii")
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(array).tobytes())
    except OSError as exc:
        raise DatasetIOError(f"cannot write {path}: {exc}") from exc


def read_pgm(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            if im.mode != "L":
                raise DatasetIOError(f"{path}: expected 8-bit grayscale, got mode {im.mode}")
            return np.array(im, dtype=np.uint8)
    except OSError as exc:
        raise DatasetIOError(f"cannot read {path}: {exc}") from exc


def write_png(path, array: np.ndarray) -> None:
    try:
        Image.fromarray(np.asarray(array, dtype=np.uint8)).save(path, format="PNG")
    except OSError as exc:
        raise DatasetIOError(f"cannot write {path}: {exc}") from exc


def read_png(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return np.array(im.convert("RGB"), dtype=np.uint8)
    except OSError as exc:
        raise DatasetIOError(f"cannot read {path}: {exc}") from exc


def write_json(path, payload) -> None:
    try:
        Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise DatasetIOError(f"cannot write {path}: {exc}") from exc


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetIOError(f"cannot read {path}: {exc}") from exc
